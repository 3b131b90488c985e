from funcspace.exceptions import MintauError


class UnsupportedDynamicsError(MintauError):
    pass


class SearchBudgetError(MintauError):
    def __init__(self, n_cells: int, depth_limit: int):
        super().__init__(
            f"The search needs {n_cells} control cells, above the depth limit {depth_limit}."
        )
        self.n_cells = n_cells
        self.depth_limit = depth_limit
