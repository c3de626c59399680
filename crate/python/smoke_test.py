"""Smoke test for the sumset extension module."""

from fractions import Fraction

import sumset


def main():
    z6 = sumset.Group(6)
    a = sumset.Set(z6, [0, 2, 4])
    b = sumset.Set(z6, "0,2")
    assert (a + b).elements() == [0, 2, 4]
    assert sumset.stabilizer(a + b).elements() == [0, 2, 4]
    assert a.measure() == Fraction(1, 2)
    assert sumset.convolution_counts(a, b) == [2, 0, 2, 0, 2, 0]
    assert sumset.convolution_counts(a, b, "dft") == sumset.convolution_counts(a, b, "naive")
    assert sumset.popular_sumset(a, b, Fraction(1, 6)).elements() == [0, 2, 4]

    cert = sumset.kneser_certificate(a, b)
    assert cert["valid"]

    z7 = sumset.Group("7")
    p = sumset.Set(z7, [0, 1])
    r = sumset.classify(p, p, "1/4", 1, Fraction(1, 7))
    assert r["tag"] == "TypeIII_2"
    assert r["witness"]["hom"]["N"] == 7

    g = sumset.Group([2, 4])
    assert g.size == 8 and g.digits(5) == [1, 1] and g.encode([1, 1]) == 5

    z8 = sumset.Group(8)
    w = sumset.semicontinuity_oracle(
        sumset.Set(z8, [0, 1, 4]), sumset.Set(z8, [0, 2, 4]), Fraction(1, 3), Fraction(1, 8)
    )
    assert w["stage"] == "periodization" and w["subcritical"]

    n = sumset.niveau_set(4, "1/2")
    assert n["size"] == 5

    rows, summary = sumset.delta_scan(sumset.Group(5), "1/4", 6)
    assert summary["pairs"] == len(rows) and summary["unclassified"] == 0

    suite = sumset.kneser_suite(6)
    assert suite["anomaly_count"] == 0

    try:
        sumset.Set(z6, [9])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range element accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
