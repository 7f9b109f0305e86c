"""The decaying kernel f(sigma): exact values against asymptotic branches.

Tabulates the ratio of the adaptive-quadrature value to the leading
large-sigma and small-sigma terms, and the residual of the Bessel-K
identity that provides an independent route to f.
"""

import math

from resolvent_asym.special import bessel_k_identity_residual, f_asymptotic, \
    f_exact

ALPHAS = (-0.5, 0.0, 0.5, 1.0, 2.0)


def main():
    print("large sigma: f_exact / leading term (should be 1 + O(1/sigma))")
    print("sigma".rjust(10) + "".join(f"alpha={a:g}".rjust(14)
                                      for a in ALPHAS))
    for sigma in (10.0, 100.0, 1000.0):
        cells = []
        for alpha in ALPHAS:
            branch = f_asymptotic(sigma, alpha)
            ratio = math.exp(f_exact(sigma, alpha).log_magnitude
                             - branch.leading_value)
            cells.append(f"{ratio:14.8f}")
        print(f"{sigma:10.1f}" + "".join(cells))

    print("\nsmall sigma (alpha > 0 leading term Gamma(alpha) sigma^-alpha)")
    print("sigma".rjust(10) + "".join(f"alpha={a:g}".rjust(14)
                                      for a in ALPHAS if a > 0))
    for sigma in (1e-2, 1e-3, 1e-4):
        cells = []
        for alpha in (a for a in ALPHAS if a > 0):
            branch = f_asymptotic(sigma, alpha)
            ratio = math.exp(f_exact(sigma, alpha).log_magnitude
                             - branch.leading_value)
            cells.append(f"{ratio:14.8f}")
        print(f"{sigma:10.0e}" + "".join(cells))

    print("\nsmall sigma, -1 < alpha < 0: the printed limit constant keeps "
          "the magnitude;")
    branch = f_asymptotic(1e-4, -0.5)
    print(f"  alpha=-0.5: limit constant {math.exp(branch.leading_value):.8f}"
          f", sign_discrepancy={branch.sign_discrepancy}")

    print("\nBessel-K identity residual |f - closed form|/f:")
    for sigma in (0.5, 5.0, 50.0):
        row = "  ".join(
            f"alpha={alpha:+.1f}: {bessel_k_identity_residual(sigma, alpha):.2e}"
            for alpha in (-0.5, 0.5, 1.5))
        print(f"  sigma={sigma:5.1f}  {row}")


if __name__ == "__main__":
    main()
