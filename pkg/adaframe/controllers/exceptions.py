def exception_handler(func):
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except AdaFrameError as e:
            return str(e)
    return wrapper


class AdaFrameError(Exception):
    def __init__(self, obj=None):
        super().__init__(obj)
        self.obj = obj

    def __str__(self):
        return f'adaframe error, Value: {self.obj}'


class NumericalFailure(AdaFrameError):
    """Solver-side failures; the command line maps these to exit code 2."""

    def __str__(self):
        return f'Numerical failure, Value: {self.obj}'


class InvalidFilterBank(AdaFrameError):
    def __str__(self):
        return f'Invalid filter bank, {self.obj}'


class InvalidBudget(AdaFrameError):
    def __str__(self):
        return f'Invalid solver budget, Value: {self.obj}'


class InvalidLearnConfig(AdaFrameError):
    def __str__(self):
        return f'Invalid learning configuration: {self.obj}'


class InvalidFilterBankDocument(AdaFrameError):
    def __str__(self):
        return f'Invalid filter bank document: {self.obj}'


class ShapeNotDivisible(AdaFrameError):
    def __str__(self):
        return f'Signal shape is not divisible by the sampling factors, Value: {self.obj}'


class ChannelMismatch(AdaFrameError):
    def __str__(self):
        return f'Channel layout of the signal does not match the filter bank, Value: {self.obj}'


class ArityMismatch(AdaFrameError):
    def __str__(self):
        return f'Number of coefficient maps does not match the filter count, Value: {self.obj}'


class DimensionMismatch(AdaFrameError):
    def __str__(self):
        return f'Filter banks do not share filter count, support and sampling, Value: {self.obj}'


class ShapeMismatch(AdaFrameError):
    def __str__(self):
        return f'Array shapes do not agree, Value: {self.obj}'


class GridNotDivisible(AdaFrameError):
    def __str__(self):
        return f'DFT grid is not divisible by the sampling factors, Value: {self.obj}'


class UnsupportedCase(AdaFrameError):
    def __str__(self):
        return f'Unsupported case: {self.obj}'


class UnknownBankName(AdaFrameError):
    def __str__(self):
        return f'Unknown built-in filter bank, Value: {self.obj}'


class OutOfRange(AdaFrameError):
    def __str__(self):
        return f'Value out of range: {self.obj}'


class InvalidSwitch(AdaFrameError):
    def __str__(self):
        return f'Invalid max-pool switch, Value: {self.obj}'


class NoLowpassFlag(AdaFrameError):
    def __str__(self):
        return f'Filter bank needs exactly one lowpass filter at index 0, Roles: {self.obj}'


class ModeMismatch(AdaFrameError):
    def __str__(self):
        return f'Decomposition tree has the wrong mode, Value: {self.obj}'


class MalformedHeader(AdaFrameError):
    def __str__(self):
        return f'Malformed file header: {self.obj}'


class UnsupportedMaxval(AdaFrameError):
    def __str__(self):
        return f'Unsupported PGM maxval, Value: {self.obj} (only 255 is supported)'


class NotConverged(NumericalFailure):
    def __init__(self, obj=None, solution=None, iterations=None):
        super().__init__(obj)
        self.solution = solution
        self.iterations = iterations

    def __str__(self):
        return f'Iterative solver did not converge, final residual: {self.obj}'


class InfeasibleStart(NumericalFailure):
    def __str__(self):
        return f'Starting filter bank violates the UEP constraints, residual: {self.obj}'


class Diverged(NumericalFailure):
    def __str__(self):
        return f'Learning diverged, objective: {self.obj}'


class InconsistentSystem(NumericalFailure):
    def __str__(self):
        msg = (
            f'H(A)B = f has no solution, least-squares residual: {self.obj}. '
            'Critically sampled banks need joint learning (learn_biframe_critical)'
        )
        return msg


class ConstraintStalled(NumericalFailure):
    def __str__(self):
        return f'Bilinear constraint residual stalled, Value: {self.obj}'


class LowpassDegenerate(NumericalFailure):
    def __str__(self):
        return f'Lowpass filter has (near) zero tap sum, Value: {self.obj}'


class RankDeficient(UserWarning):
    pass
