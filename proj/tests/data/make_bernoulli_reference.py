"""Reference values of B(x) = x / (exp(x) - 1) at 50 significant digits."""
import mpmath

mpmath.mp.dps = 50


def main():
    lo, hi = mpmath.mpf("1e-15"), mpmath.mpf(700)
    points = [lo * (hi / lo) ** (mpmath.mpf(i) / 199) for i in range(200)]
    with open("bernoulli_reference.txt", "w") as out:
        out.write("# x B(x), x rounded to double first\n")
        for mag in points:
            for sign in (1, -1):
                x = float(sign * mag)
                xm = mpmath.mpf(x)
                b = xm / mpmath.expm1(xm)
                out.write("%s %s\n" % (repr(x), mpmath.nstr(b, 25, min_fixed=1, max_fixed=0)))


if __name__ == "__main__":
    main()
