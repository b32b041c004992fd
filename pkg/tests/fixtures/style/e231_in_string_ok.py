s = 'a,b:c'
