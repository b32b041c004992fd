x = a**-b
y = a[b:c]
z = a[1:-1]
