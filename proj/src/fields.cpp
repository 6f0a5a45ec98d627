// SPDX-License-Identifier: Apache-2.0
#include "spdelab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "spdelab/errors.hpp"

namespace spdelab {

const char* class_name(FieldClass c) {
    switch (c) {
        case FieldClass::BUC: return "BUC";
        case FieldClass::X: return "X";
        case FieldClass::Holder: return "BUC_alpha";
        case FieldClass::Smooth: return "smooth";
    }
    return "?";
}

double ScalarField::class_norm() const {
    switch (cls) {
        case FieldClass::BUC: return sup_bound;
        case FieldClass::X:
        case FieldClass::Smooth: return sup_bound + std::max(0.0, grad_bound);
        case FieldClass::Holder: return sup_bound + std::max(0.0, seminorm);
    }
    return sup_bound;
}

double sine_holder_constant(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw ArgumentError("sine_holder_constant: alpha in (0,1]");
    // the maximiser sits below v = 2 pi; grid then golden refinement
    auto g = [&](double v) { return 2.0 * std::abs(std::sin(0.5 * v)) / std::pow(v, alpha); };
    double best = 0, vb = 1;
    for (int i = 1; i <= 4000; ++i) {
        double v = 2 * M_PI * i / 4000.0;
        if (g(v) > best) best = g(v), vb = v;
    }
    double lo = std::max(1e-12, vb - 2 * M_PI / 4000), hi = vb + 2 * M_PI / 4000;
    const double ig = 0.5 * (std::sqrt(5.0) - 1);
    for (int it = 0; it < 100; ++it) {
        double c = hi - ig * (hi - lo), d = lo + ig * (hi - lo);
        if (g(c) > g(d)) hi = d;
        else lo = c;
    }
    return std::max(best, g(0.5 * (lo + hi)));
}

namespace {

using Params = std::map<std::string, double>;

Params parse_params(const std::string& body, const std::string& spec) {
    Params p;
    if (body.empty()) return p;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("field '" + spec + "': expected key=value, got '" + item + "'");
        std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            double v = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
            p[key] = v;
        } catch (const std::exception&) {
            throw ConfigError("field '" + spec + "': value of '" + key + "' is not a number");
        }
    }
    return p;
}

double take(Params& p, const std::string& key, double def, bool required, const std::string& spec) {
    auto it = p.find(key);
    if (it == p.end()) {
        if (required) throw ConfigError("field '" + spec + "': missing parameter '" + key + "'");
        return def;
    }
    double v = it->second;
    p.erase(it);
    return v;
}

void reject_rest(const Params& p, const std::string& spec) {
    if (!p.empty()) throw ConfigError("field '" + spec + "': unknown parameter '" + p.begin()->first + "'");
}

double clamp1(double v) { return std::max(-1.0, std::min(1.0, v)); }

}  // namespace

ScalarField make_field(const std::string& spec, const SpectralModel& model) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    Params p = parse_params(colon == std::string::npos ? "" : spec.substr(colon + 1), spec);
    const int n = model.n();
    const Vec r = model.r();
    const double r1 = r[0];
    ScalarField f;
    f.name = spec;

    if (kind == "const") {
        double c = take(p, "c", 1.0, false, spec);
        reject_rest(p, spec);
        f.cls = FieldClass::Smooth;
        f.sup_bound = std::abs(c);
        f.seminorm = 0;
        f.grad_bound = 0;
        f.eval = [c](const double*) { return c; };
        f.grad_R = [n](const double*, double* g) { std::fill(g, g + n, 0.0); };
    } else if (kind == "sin") {
        double w = take(p, "omega", 1.0, true, spec);
        double ph = take(p, "phase", 0.0, false, spec);
        reject_rest(p, spec);
        f.cls = FieldClass::X;
        f.sup_bound = 1.0;
        f.grad_bound = std::abs(w) * r1;
        f.eval = [w, ph](const double* x) { return std::sin(w * x[0] + ph); };
        f.grad_R = [w, ph, r1, n](const double* x, double* g) {
            std::fill(g, g + n, 0.0);
            g[0] = r1 * r1 * w * std::cos(w * x[0] + ph);
        };
    } else if (kind == "holder") {
        double a = take(p, "alpha", 0.5, true, spec);
        reject_rest(p, spec);
        if (!(a > 0 && a < 1)) throw ConfigError("field '" + spec + "': alpha must lie in (0,1)");
        f.cls = FieldClass::Holder;
        f.alpha = a;
        f.sup_bound = 1.0;
        f.seminorm = std::pow(r1, a);   // t -> min(|t|^a, 1) has constant 1 on R
        f.eval = [a](const double* x) { return std::min(std::pow(std::abs(x[0]), a), 1.0); };
    } else if (kind == "ramp") {
        double wd = take(p, "width", 0.05, false, spec);
        reject_rest(p, spec);
        if (!(wd > 0)) throw ConfigError("field '" + spec + "': width must be positive");
        f.cls = FieldClass::BUC;
        f.sup_bound = 1.0;
        f.eval = [wd](const double* x) { return clamp1(x[0] / wd); };
    } else if (kind == "ramp2") {
        double wd = take(p, "width", 0.05, false, spec);
        reject_rest(p, spec);
        if (!(wd > 0)) throw ConfigError("field '" + spec + "': width must be positive");
        if (n < 2) throw ConfigError("field '" + spec + "' needs n >= 2");
        f.cls = FieldClass::BUC;
        f.sup_bound = 1.0;
        f.eval = [wd](const double* x) { return clamp1(x[0] / wd) * clamp1(x[1] / wd); };
    } else if (kind == "gauss") {
        double s = take(p, "scale", 1.0, false, spec);
        reject_rest(p, spec);
        if (!(s > 0)) throw ConfigError("field '" + spec + "': scale must be positive");
        f.cls = FieldClass::Smooth;
        f.sup_bound = 1.0;
        f.grad_bound = r1 * std::exp(-0.5) / s;
        f.eval = [s, n](const double* x) {
            double q = 0;
            for (int k = 0; k < n; ++k) q += x[k] * x[k];
            return std::exp(-0.5 * q / (s * s));
        };
        f.grad_R = [s, n, r](const double* x, double* g) {
            double q = 0;
            for (int k = 0; k < n; ++k) q += x[k] * x[k];
            double v = std::exp(-0.5 * q / (s * s));
            for (int k = 0; k < n; ++k) g[k] = -r[k] * r[k] * x[k] / (s * s) * v;
        };
    } else if (kind == "lacunary") {
        // sum_j a_j sin(omega_j x_1 + phase), omega_j = omega0 2^{j/2}, a_j ~ omega_j^{-alpha}
        double a = take(p, "alpha", 0.0, false, spec);
        double ph = take(p, "phase", 0.0, false, spec);
        double w0 = take(p, "omega0", 1.0, false, spec);
        double lv = take(p, "levels", 15, false, spec);
        reject_rest(p, spec);
        if (!(a >= 0 && a < 1)) throw ConfigError("field '" + spec + "': alpha must lie in [0,1)");
        if (!(lv >= 1 && lv <= 64)) throw ConfigError("field '" + spec + "': levels must lie in [1,64]");
        const int L = int(lv);
        Vec om(L), amp(L);
        double tot = 0;
        for (int j = 0; j < L; ++j) {
            om[j] = w0 * std::pow(2.0, 0.5 * j);
            amp[j] = std::pow(om[j], -a);
            tot += amp[j];
        }
        double lip = 0;
        for (int j = 0; j < L; ++j) {
            amp[j] /= tot;
            lip += amp[j] * om[j];
        }
        f.cls = a > 0 ? FieldClass::Holder : FieldClass::BUC;
        f.alpha = a;
        f.sup_bound = 1.0;
        if (a > 0) {
            double ca = sine_holder_constant(a), s = 0;
            for (int j = 0; j < L; ++j) s += amp[j] * ca * std::pow(om[j] * r1, a);
            f.seminorm = s;
        }
        f.grad_bound = lip * r1;
        f.eval = [om, amp, ph](const double* x) {
            double s = 0;
            for (std::size_t j = 0; j < om.size(); ++j) s += amp[j] * std::sin(om[j] * x[0] + ph);
            return s;
        };
        f.grad_R = [om, amp, ph, r1, n](const double* x, double* g) {
            std::fill(g, g + n, 0.0);
            double s = 0;
            for (std::size_t j = 0; j < om.size(); ++j) s += amp[j] * om[j] * std::cos(om[j] * x[0] + ph);
            g[0] = r1 * r1 * s;
        };
    } else {
        throw ConfigError("unknown field '" + kind + "' (see `catalog`)");
    }
    return f;
}

std::vector<CatalogEntry> builtin_fields() {
    return {
        {"const:c=1", "constant, class smooth"},
        {"sin:omega=1", "sin(omega x_1 + phase), class X, ||f||_X = 1 + omega r_1"},
        {"sin:omega=50", "high-frequency sine, class X"},
        {"holder:alpha=0.5", "min(|x_1|^alpha, 1), class BUC_alpha, seminorm r_1^alpha"},
        {"ramp:width=0.05", "clamp(x_1 / width, -1, 1), class BUC (rough)"},
        {"ramp2:width=0.01", "product of ramps in x_1 and x_2, class BUC"},
        {"gauss:scale=1", "exp(-||x||^2 / (2 scale^2)), class smooth"},
        {"lacunary:alpha=0", "sum of 15 dyadic sines with equal weights, class BUC"},
        {"lacunary:alpha=0.5", "weights omega_j^{-alpha}, class BUC_alpha"},
    };
}

}  // namespace spdelab
