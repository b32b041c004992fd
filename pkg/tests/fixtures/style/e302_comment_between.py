x = 1

# comment
def f():
    pass
