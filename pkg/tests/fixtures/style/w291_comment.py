# comment 
x = 1
