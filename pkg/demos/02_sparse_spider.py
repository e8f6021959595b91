"""
Two terms against a million entries
===================================

The n-to-n spider copies one bit across 2n legs, so its dense matrix
is almost entirely zeros: 2^n x 2^n entries with just two of them set.
The token machine never touches that grid.  Seeding one leg and
normalizing leaves exactly two terms, one per bit value, each holding
2n boundary tokens, no matter how large n grows.
"""

import time

from zxtk import extract_state, interp
from zxtk.families import spider_z_nn

print(f"{'n':>3} {'token form':>22} {'dense form':>18} {'extract':>9} {'dense':>9}")
for n in (2, 4, 6, 8, 10):
    d = spider_z_nn(n)

    t0 = time.perf_counter()
    st = extract_state(d)
    t_tok = time.perf_counter() - t0

    t0 = time.perf_counter()
    m = interp(d)
    t_dense = time.perf_counter() - t0

    terms = len(st.terms)
    width = len(next(iter(st.terms)))
    print(f"{n:>3} {f'{terms} terms x {width} tokens':>22} "
          f"{f'{m.shape[0]}x{m.shape[1]} entries':>18} "
          f"{t_tok * 1e3:>7.2f}ms {t_dense * 1e3:>7.2f}ms")

# The two terms are the all-zeros and all-ones boundary patterns; a
# phase on the spider would multiply the all-ones term and nothing
# else.
d = spider_z_nn(3)
for term, coeff in sorted(extract_state(d).terms.items()):
    print(f"  {coeff:.3g} * {' '.join(map(str, term))}")
