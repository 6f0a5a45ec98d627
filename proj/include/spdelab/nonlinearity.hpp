// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "spdelab/spectral_model.hpp"

namespace spdelab {

// G : X -> X with three bounded derivatives. All outputs are written to
// caller-provided buffers of length n (no allocation on the hot path).
class Nonlinearity {
public:
    virtual ~Nonlinearity() = default;

    virtual std::string name() const = 0;
    virtual bool is_zero() const { return false; }

    virtual void eval(const double* x, double* out) const = 0;
    virtual void d1(const double* x, const double* h, double* out) const = 0;
    virtual void d2(const double* x, const double* h, const double* k, double* out) const = 0;
    virtual void d3(const double* x, const double* h, const double* k, const double* j,
                    double* out) const = 0;

    // uniform bound on ||D^i G|| for i = 1..3
    double M() const { return M_; }
    int n() const { return n_; }

protected:
    explicit Nonlinearity(int n) : n_(n) {}
    int n_;
    double M_ = 0;
};

class ZeroNonlinearity final : public Nonlinearity {
public:
    explicit ZeroNonlinearity(int n) : Nonlinearity(n) {}
    std::string name() const override { return "zero"; }
    bool is_zero() const override { return true; }
    void eval(const double*, double* out) const override;
    void d1(const double*, const double*, double* out) const override;
    void d2(const double*, const double*, const double*, double* out) const override;
    void d3(const double*, const double*, const double*, const double*, double* out) const override;
};

// Phi(s) = c / (1 + s), s = ||x||^2.
//   fixed:  G(x) = Phi(||x||^2) v   (v a unit basis vector)
//   scaled: G(x) = Phi(||x||^2) x
class RadialNonlinearity final : public Nonlinearity {
public:
    enum class Kind { Fixed, Scaled };

    // m_target > 0 rescales c so that M == m_target
    RadialNonlinearity(int n, Kind kind, double c, int v_index, double m_target);

    std::string name() const override;
    Kind kind() const { return kind_; }
    double c() const { return c_; }

    void eval(const double* x, double* out) const override;
    void d1(const double* x, const double* h, double* out) const override;
    void d2(const double* x, const double* h, const double* k, double* out) const override;
    void d3(const double* x, const double* h, const double* k, const double* j,
            double* out) const override;

    // operator-norm upper bounds of D^i G at ||x||^2 = s, for c = 1
    static double bound(Kind kind, int order, double s);

private:
    double phi(int d, double s) const;

    Kind kind_;
    double c_;
    int v_;
};

std::unique_ptr<Nonlinearity> make_zero(int n);

}  // namespace spdelab
