f(1,2)
