x = a[1:2]
y = a[1:2, ::3]
