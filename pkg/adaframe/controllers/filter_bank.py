# stdlib
from numbers import Integral, Real
# local
from adaframe.controllers.exceptions import exception_handler, InvalidFilterBankDocument

KIND_CHOICES = ['frame', 'biframe_decomp', 'biframe_recon']
ROLE_CHOICES = ['lowpass', 'highpass']
SUPPORTED_VERSIONS = [1]

__all__ = ['FilterBankDocument']


class FilterBankDocument:
    """Validates a parsed FilterBankFile JSON document."""
    document: dict
    success: bool
    errors: list

    def __init__(self, document) -> None:
        self.document = document
        self.success = True
        self.errors = []

    def __call__(self):
        if not isinstance(self.document, dict):
            return False, ['Filter bank document must be a JSON object']

        validators = [
            self._validate_version,
            self._validate_kind,
            self._validate_shape,
            self._validate_roles,
            self._validate_filters,
        ]

        for validator in validators:
            error = validator()
            if error is not None:
                self.success = False
                self.errors.append(str(error))

        return self.success, self.errors

    def _count(self, key):
        value = self.document.get(key)
        if not isinstance(value, Integral) or isinstance(value, bool):
            raise InvalidFilterBankDocument(f'`{key}` must be an integer, got {value!r}')
        return value

    @exception_handler
    def _validate_version(self):
        if self.document.get('version') not in SUPPORTED_VERSIONS:
            raise InvalidFilterBankDocument(f'unsupported version {self.document.get("version")!r}')
        return None

    @exception_handler
    def _validate_kind(self):
        if self.document.get('kind') not in KIND_CHOICES:
            raise InvalidFilterBankDocument(f'`kind` must be one of {KIND_CHOICES}')
        return None

    @exception_handler
    def _validate_shape(self):
        d = self._count('d')
        m = self._count('m')
        if d < 1 or m < 1:
            raise InvalidFilterBankDocument('`d` and `m` must be positive')
        for key in ('support', 'samplingDiag'):
            values = self.document.get(key)
            if type(values) is not list or len(values) != d:
                raise InvalidFilterBankDocument(f'`{key}` must be a list of {d} integers')
            if any(not isinstance(v, Integral) or v < 1 for v in values):
                raise InvalidFilterBankDocument(f'`{key}` entries must be positive integers')
        if self._count('channelSupport') < 0 or self.document.get('channelSampling', 0) < 0:
            raise InvalidFilterBankDocument('channel fields must be non-negative')
        return None

    @exception_handler
    def _validate_roles(self):
        roles = self.document.get('roles')
        if type(roles) is not list or len(roles) != self.document.get('m'):
            raise InvalidFilterBankDocument('`roles` must list one role per filter')
        if any(role not in ROLE_CHOICES for role in roles):
            raise InvalidFilterBankDocument(f'roles must be one of {ROLE_CHOICES}')
        return None

    @exception_handler
    def _validate_filters(self):
        filters = self.document.get('filters')
        if type(filters) is not list or len(filters) != self.document.get('m'):
            raise InvalidFilterBankDocument('`filters` must hold one tap list per filter')
        n_taps = max(self.document.get('channelSupport') or 0, 1)
        for r in self.document.get('support') or []:
            n_taps *= r if isinstance(r, Integral) else 0
        for taps in filters:
            if type(taps) is not list or len(taps) != n_taps:
                raise InvalidFilterBankDocument(f'every filter needs {n_taps} taps')
            if any(not isinstance(t, Real) or isinstance(t, bool) for t in taps):
                raise InvalidFilterBankDocument('taps must be numbers')
        return None
