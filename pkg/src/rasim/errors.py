class InvalidParameters(ValueError):
    """A parameter block violates its invariants.

    ``problems`` holds ``(field_names, message)`` pairs so that the config
    loader can prefix every entry with its dotted path.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        text = "; ".join(f"{', '.join(f)}: {m}" for f, m in self.problems)
        super().__init__(text)


def raise_if(problems) -> None:
    if problems:
        raise InvalidParameters(problems)
