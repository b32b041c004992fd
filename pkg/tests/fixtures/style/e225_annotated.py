def f(a: int=1) -> None:
    pass
