// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spdelab/spectral_model.hpp"

namespace spdelab {

enum class FieldClass { BUC, X, Holder, Smooth };

const char* class_name(FieldClass c);

// f : X -> R with a declared regularity class. grad_R, when present, returns
// the H_R-gradient R^2 grad f.
struct ScalarField {
    std::string name;
    FieldClass cls = FieldClass::BUC;
    double alpha = 0;        // Holder exponent when cls == Holder
    double sup_bound = 0;    // ||f||_inf
    double seminorm = -1;    // declared [f]_alpha along H_R, < 0 if unknown
    double grad_bound = -1;  // sup ||grad_R f||_R, < 0 if unknown
    std::function<double(const double*)> eval;
    std::function<void(const double*, double*)> grad_R;

    bool has_grad() const { return bool(grad_R); }
    double operator()(const Vec& x) const { return eval(x.data()); }
    // norm of the declared class: sup, sup + grad, sup + seminorm
    double class_norm() const;
};

// max_{v > 0} 2|sin(v/2)| / v^alpha, the alpha-Holder constant of sin
double sine_holder_constant(double alpha);

// "name:key=value,key=value"
ScalarField make_field(const std::string& spec, const SpectralModel& model);

struct CatalogEntry {
    std::string spec;
    std::string description;
};

std::vector<CatalogEntry> builtin_fields();

}  // namespace spdelab
