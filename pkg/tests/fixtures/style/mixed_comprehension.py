squares = [x**2 for x in range(10) if x%2==0]
d = {k:v for k,v in items}
