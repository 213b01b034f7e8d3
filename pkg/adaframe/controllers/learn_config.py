# stdlib
from numbers import Integral, Real
# local
from adaframe.controllers.exceptions import exception_handler, InvalidLearnConfig

SPARSITY_CHOICES = ['l1', 'l0', 'huber']
INIT_CHOICES = ['randomOrthogonal', 'waveletBank', 'explicit']

__all__ = ['LearnConfigValidator']


class LearnConfigValidator:
    """Validates a mapping of LearnConfig fields (snake_case keys)."""
    config: dict
    success: bool
    errors: list

    def __init__(self, config) -> None:
        self.config = config
        self.success = True
        self.errors = []

    def __call__(self):
        validators = [
            self._validate_m,
            self._validate_support,
            self._validate_sampling,
            self._validate_positive_weights,
            self._validate_sparsity,
            self._validate_init,
            self._validate_iterations,
            self._validate_channels,
        ]

        for validator in validators:
            error = validator()
            if error is not None:
                self.success = False
                self.errors.append(str(error))

        return self.success, self.errors

    @exception_handler
    def _validate_m(self):
        m = self.config.get('m')
        if not isinstance(m, Integral) or isinstance(m, bool) or m < 1:
            raise InvalidLearnConfig(f'`m` must be a positive integer, got {m!r}')
        return None

    @exception_handler
    def _validate_support(self):
        support = self.config.get('support')
        if not support or any(not isinstance(r, Integral) or r < 1 for r in support):
            raise InvalidLearnConfig(f'`support` must be a list of positive integers, got {support!r}')
        return None

    @exception_handler
    def _validate_sampling(self):
        sampling = self.config.get('M')
        support = self.config.get('support') or ()
        if not sampling or any(not isinstance(k, Integral) or k < 1 for k in sampling):
            raise InvalidLearnConfig(f'`M` must be a list of positive integers, got {sampling!r}')
        if len(sampling) != len(support):
            raise InvalidLearnConfig(f'`M` {sampling!r} and `support` {support!r} differ in dimension')
        return None

    @exception_handler
    def _validate_positive_weights(self):
        for key in ('eta', 'lam', 'rel_tolerance', 'constraint_tolerance', 'huber_delta'):
            value = self.config.get(key)
            if value is None:
                continue
            if not isinstance(value, Real) or value <= 0:
                raise InvalidLearnConfig(f'`{key}` must be positive, got {value!r}')
        return None

    @exception_handler
    def _validate_sparsity(self):
        if self.config.get('sparsity', 'l1') not in SPARSITY_CHOICES:
            raise InvalidLearnConfig(f'`sparsity` must be one of {SPARSITY_CHOICES}')
        return None

    @exception_handler
    def _validate_init(self):
        init = self.config.get('init', 'randomOrthogonal')
        if init not in INIT_CHOICES:
            raise InvalidLearnConfig(f'`init` must be one of {INIT_CHOICES}, got {init!r}')
        if init == 'waveletBank' and not self.config.get('init_name'):
            raise InvalidLearnConfig('`init` waveletBank needs a bank name')
        if init == 'explicit' and self.config.get('init_bank') is None:
            raise InvalidLearnConfig('`init` explicit needs a filter bank')
        return None

    @exception_handler
    def _validate_iterations(self):
        for key in ('max_outer', 'restarts', 'a_step_outer', 'a_step_inner', 'cg_iterations'):
            value = self.config.get(key)
            if value is not None and (not isinstance(value, Integral) or value < 1):
                raise InvalidLearnConfig(f'`{key}` must be a positive integer, got {value!r}')
        return None

    @exception_handler
    def _validate_channels(self):
        support = self.config.get('channel_support', 0) or 0
        sampling = self.config.get('channel_sampling', 0) or 0
        if support < 0 or sampling < 0:
            raise InvalidLearnConfig('channel support and sampling must be non-negative')
        if sampling and not support:
            raise InvalidLearnConfig('`channel_sampling` needs `channel_support`')
        return None
