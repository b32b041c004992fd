"""Cell chains exercising unused-variable detection, keyed by fixture name."""

CHAINS: dict[str, list[str]] = {
    # plain assignment
    "plain_used": ["x = 1\nprint(x)\n"],
    "plain_unused": ["x = 1\ny = 2\nprint(x)\n"],
    "plain_across_cells": ["x = 1\n", "y = x + 1\n", "print(y)\n"],
    "plain_read_before_store": ["print(x)\n", "x = 1\n"],
    "plain_self_reference": ["x = x + 1\n"],
    "plain_rebind_later_used": ["x = 1\nx = 2\nprint(x)\n"],
    "plain_chained_targets": ["a = b = 0\nprint(a)\n"],
    "attribute_target": ["obj = make()\nobj.attr = 1\n"],
    "subscript_target": ["d = {}\nd['k'] = 1\n"],
    # augmented assignment
    "aug_only": ["n = 0\nn += 1\n"],
    "aug_then_read": ["n = 0\nn += 1\nprint(n)\n"],
    "aug_across_cells": ["total = 0\n", "total += 5\n", "total *= 2\n"],
    "aug_value_reads": ["a = 1\nb = 0\nb += a\n"],
    # unpacking
    "unpack_partial": ["a, b = 1, 2\nprint(a)\n"],
    "unpack_star": ["first, *rest = [1, 2, 3]\nprint(first)\n"],
    "unpack_nested": ["(a, (b, c)) = (1, (2, 3))\nprint(a, c)\n"],
    "unpack_list_target": ["[p, q] = [1, 2]\nprint(q)\n"],
    # for targets
    "for_unused_target": ["for i in range(3):\n    print('x')\n"],
    "for_used_target": ["for i in range(3):\n    print(i)\n"],
    "for_tuple_target": ["for k, v in {}.items():\n    print(k)\n"],
    "for_else": ["for i in []:\n    pass\nelse:\n    done = True\n"],
    "for_iter_reads_prior": ["xs = [1]\nfor x in xs:\n    pass\n"],
    # with targets
    "with_unused": ["with open('f') as fh:\n    pass\n"],
    "with_used": ["with open('f') as fh:\n    data = fh.read()\nprint(data)\n"],
    "with_tuple": ["with ctx() as (a, b):\n    print(b)\n"],
    # functions and nesting
    "func_local_unused": ["def f():\n    tmp = 1\n    return 2\nf()\n"],
    "func_param_unused": ["def f(a, b):\n    return a\nf(1, 2)\n"],
    "func_never_called": ["def helper():\n    return 1\n"],
    "func_called_later_cell": ["def helper():\n    return 1\n", "helper()\n"],
    "func_reads_global_later": ["def show():\n    print(cfg)\n", "cfg = 1\n", "show()\n"],
    "func_reads_global_earlier": ["cfg = 1\n", "def show():\n    print(cfg)\n", "show()\n"],
    "nested_closure": ["def outer():\n    v = 1\n    def inner():\n        return v\n    return inner\nouter()\n"],
    "nested_closure_unused": ["def outer():\n    v = 1\n    def inner():\n        return 0\n    return inner\nouter()\n"],
    "nonlocal_write": ["def outer():\n    c = 0\n    def bump():\n        nonlocal c\n        c = c + 1\n    bump()\n    return 1\nouter()\n"],
    "global_write": ["def setup():\n    global state\n    state = 1\n", "setup()\n"],
    "global_write_read": ["def setup():\n    global state\n    state = 1\n", "setup()\nprint(state)\n"],
    "recursive": ["def fact(n):\n    return 1 if n < 2 else n * fact(n - 1)\n"],
    "decorator_and_default": ["dec = lambda f: f\nd = 3\n@dec\ndef g(x=d):\n    return x\ng()\n"],
    "lambda_param": ["f = lambda a, b: a\nprint(f)\n"],
    "async_def": ["async def go():\n    r = await thing()\n    return 1\n"],
    "class_attrs": ["class C:\n    attr = 1\n    def m(self):\n        return 2\nC()\n"],
    "class_unused": ["class C:\n    pass\n"],
    "class_body_reads_global": ["size = 4\nclass C:\n    n = size\nprint(C)\n"],
    # shadowing
    "shadow_param": ["x = 1\ndef f(x):\n    return x\nf(2)\n"],
    "shadow_local": ["x = 1\ndef f():\n    x = 2\n    return x\nf()\n"],
    "shadow_comprehension": ["x = 5\nys = [x for x in range(3)]\nprint(ys)\n"],
    # del
    "del_counts_not_as_read": ["tmp = 1\ndel tmp\n"],
    "del_then_rebind": ["t = 1\ndel t\nt = 2\nprint(t)\n"],
    "del_in_function": ["def f():\n    z = 1\n    del z\nf()\n"],
    # last expression of a cell
    "last_expression": ["df = load()\n", "df\n"],
    "last_expression_attribute": ["df = load()\n", "df.head()\n"],
    # imports
    "import_unused": ["import os\nimport sys\nprint(sys)\n"],
    "import_alias": ["import numpy as np\nfrom os import path as p\n"],
    "import_dotted": ["import os.path\nos.getcwd()\n"],
    "import_star": ["from os import *\n"],
    "import_in_function": ["def f():\n    import json\n    return 1\nf()\n"],
    # comprehensions
    "comp_target_unused": ["out = [1 for i in range(3)]\nprint(out)\n"],
    "comp_condition_reads": ["out = [1 for i in range(3) if i]\nprint(out)\n"],
    "comp_nested_generators": ["m = [[1]]\nflat = [y for row in m for y in row]\nprint(flat)\n"],
    "dict_comp": ["d = {k: 0 for k, v in [(1, 2)]}\nprint(d)\n"],
    "generator_exp": ["s = sum(v for v in range(3))\n"],
    "walrus_in_comp": ["vals = [(last := v) for v in range(3)]\nprint(vals)\n"],
    "walrus_plain": ["if (n := 10) > 5:\n    pass\n"],
    # everything else
    "exception_name_unused": ["try:\n    run()\nexcept ValueError as err:\n    pass\n"],
    "exception_name_used": ["try:\n    run()\nexcept ValueError as err:\n    print(err)\n"],
    "annotation_only": ["count: int\n"],
    "annotated_assign": ["count: int = 0\nlimit: int = 9\nprint(limit)\n"],
    "underscore": ["_ = compute()\n_tmp = 1\n"],
    "dunder_all": ["__all__ = ['api']\napi = 1\nhidden = 2\n"],
    "fstring_read": ["name = 'a'\nprint(f'{name}!')\n"],
    "ifexp_body_reads": ["a = 1\nb = a if a else 0\nprint(b)\n"],
    "while_loop": ["i = 0\nwhile i < 3:\n    i += 1\n"],
    "syntax_error_cell": ["x = 1\n", "def broken(:\n", "print(x)\ny = 2\n"],
    "empty_chain": [],
    "many_cells_order": ["a = 1\n", "b = a\n", "a = 2\n", "c = b\n"],
}
