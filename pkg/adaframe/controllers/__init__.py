from .filter_bank import FilterBankDocument
from .learn_config import LearnConfigValidator

__all__ = [
    'FilterBankDocument',
    'LearnConfigValidator',
]
