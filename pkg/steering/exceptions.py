from funcspace.exceptions import MintauError


class DelayTooLargeError(MintauError):
    def __init__(self, tau: float, threshold: float):
        super().__init__(
            f"Delay tau = {tau:.12g} is not below the admissible threshold {threshold:.12g}."
        )
        self.tau = tau
        self.threshold = threshold


class SteeringPreconditionError(MintauError):
    pass


class CertificationFailureError(MintauError):
    def __init__(self, message: str, log=None):
        super().__init__(message)
        self.log = log


class MaxItersExhaustedError(MintauError):
    def __init__(self, max_iters: int, log=None):
        super().__init__(f"Steering did not reach the termination distance in {max_iters} iterations.")
        self.max_iters = max_iters
        self.log = log
