if x in(1, 2):
    pass
if x is(None):
    pass
