class MintauError(Exception):
    """Base class for numerical failures raised by the toolkit."""


class ShapeError(MintauError):
    def __init__(self, message: str, left: tuple, right: tuple):
        super().__init__(f"{message}: {left} vs {right}")
        self.left = left
        self.right = right
