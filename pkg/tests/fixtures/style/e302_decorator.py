x = 1
@dec
def f():
    pass
