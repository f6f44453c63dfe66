#pragma once

#include <cmath>
#include <vector>

namespace msieve {

//! Truncated Taylor series c_0 + c_1 h + ... + c_N h^N at a point.
class jet {
public:
    explicit jet(int order = 0, double value = 0.0) : c_(order + 1, 0.0) { c_[0] = value; }

    static jet variable(int order, double x0)
    {
        jet j(order, x0);
        if (order >= 1)
            j.c_[1] = 1.0;
        return j;
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return c_[k]; }
    double& operator[](int k) { return c_[k]; }

    //! k-th derivative at the expansion point.
    double derivative(int k) const
    {
        double f = 1.0;
        for (int i = 2; i <= k; ++i)
            f *= i;
        return c_[k] * f;
    }

    jet& operator+=(const jet& o)
    {
        for (std::size_t i = 0; i < c_.size(); ++i)
            c_[i] += o.c_[i];
        return *this;
    }
    jet& operator-=(const jet& o)
    {
        for (std::size_t i = 0; i < c_.size(); ++i)
            c_[i] -= o.c_[i];
        return *this;
    }
    jet& operator*=(double s)
    {
        for (double& v : c_)
            v *= s;
        return *this;
    }
    friend jet operator+(jet a, const jet& b) { return a += b; }
    friend jet operator-(jet a, const jet& b) { return a -= b; }
    friend jet operator*(jet a, double s) { return a *= s; }
    friend jet operator*(double s, jet a) { return a *= s; }
    friend jet operator+(jet a, double s)
    {
        a.c_[0] += s;
        return a;
    }
    friend jet operator-(double s, jet a)
    {
        a *= -1.0;
        a.c_[0] += s;
        return a;
    }

    friend jet operator*(const jet& a, const jet& b)
    {
        const int n = a.order();
        jet r(n);
        for (int k = 0; k <= n; ++k) {
            double s = 0.0;
            for (int j = 0; j <= k; ++j)
                s += a.c_[j] * b.c_[k - j];
            r.c_[k] = s;
        }
        return r;
    }

    friend jet reciprocal(const jet& a)
    {
        const int n = a.order();
        jet r(n);
        r.c_[0] = 1.0 / a.c_[0];
        for (int k = 1; k <= n; ++k) {
            double s = 0.0;
            for (int j = 1; j <= k; ++j)
                s += a.c_[j] * r.c_[k - j];
            r.c_[k] = -s * r.c_[0];
        }
        return r;
    }

    friend jet operator/(const jet& a, const jet& b) { return a * reciprocal(b); }

    friend jet exp(const jet& a)
    {
        const int n = a.order();
        jet r(n);
        r.c_[0] = std::exp(a.c_[0]);
        for (int k = 1; k <= n; ++k) {
            double s = 0.0;
            for (int j = 1; j <= k; ++j)
                s += j * a.c_[j] * r.c_[k - j];
            r.c_[k] = s / k;
        }
        return r;
    }

    friend jet log(const jet& a)
    {
        const int n = a.order();
        jet r(n);
        r.c_[0] = std::log(a.c_[0]);
        for (int k = 1; k <= n; ++k) {
            double s = 0.0;
            for (int j = 1; j < k; ++j)
                s += j * r.c_[j] * a.c_[k - j];
            r.c_[k] = (a.c_[k] - s / k) / a.c_[0];
        }
        return r;
    }

    //! Series of x -> f(s x) given the series of f at s x0.
    jet scaled(double s) const
    {
        jet r = *this;
        double p = 1.0;
        for (auto& v : r.c_) {
            v *= p;
            p *= s;
        }
        return r;
    }

private:
    std::vector<double> c_;
};

}  // namespace msieve
