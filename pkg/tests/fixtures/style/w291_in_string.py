s = '''abc   
def'''
