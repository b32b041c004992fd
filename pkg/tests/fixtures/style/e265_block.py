#comment
x = 1
