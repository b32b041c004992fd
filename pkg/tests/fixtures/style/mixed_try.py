try:
  import x
except ImportError as e :
  x=None
