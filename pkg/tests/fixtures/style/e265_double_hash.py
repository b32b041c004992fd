## section
#!x
