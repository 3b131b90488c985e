from funcspace.exceptions import MintauError


class IntegratorConfigurationError(MintauError):
    pass


class NumericalBlowupError(MintauError):
    def __init__(self, time: float):
        super().__init__(f"Non-finite state reached at t = {time:.12g}")
        self.time = time


class HistoryDomainError(MintauError):
    pass
