// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <boost/uuid/detail/sha1.hpp>

#include "internal.hpp"
#include "spdelab/errors.hpp"

namespace spdelab {
namespace detail {
namespace {

const std::vector<KeySpec> kExperiment = {
    {"kind", Ty::Str, "''"},
    {"name", Ty::Str, "''"},
};

const std::vector<KeySpec> kModel = {
    {"n", Ty::Int, "8"},
    {"q_eigs", Ty::Eigs, "k^-2"},
    {"beta", Ty::Real, "1"},
    {"rho", Ty::Real, "0.5"},
    {"trace_exponent", Ty::Real, "0.5"},
    {"noise_scale", Ty::Real, "1"},
};

const std::vector<KeySpec> kNonlinearity = {
    {"name", Ty::Str, "zero"},
    {"kind", Ty::Str, "fixed"},
    {"c", Ty::Real, "1"},
    {"v_index", Ty::Int, "0"},
    {"M", Ty::Real, "0.1"},
};

const std::vector<KeySpec> kRun = {
    {"seed", Ty::Int, "1"},
    {"n_paths", Ty::Int, "10000"},
    {"n_inner", Ty::Int, "32"},
    {"dt", Ty::Real, "0.01"},
    {"min_steps", Ty::Int, "4"},
    {"threads", Ty::Int, "0"},
};

const std::vector<KeySpec> kOutput = {
    {"dir", Ty::Str, "out"},
    {"formats", Ty::Strs, "[csv, json, plotdata]"},
};

const char* const kSections[] = {"experiment", "model", "nonlinearity", "run", "params", "output"};

std::string path_of(const char* sec, const std::string& key) { return std::string(sec) + "." + key; }

double as_real(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError(where + ": expected a number");
    double v;
    try {
        v = n.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": '" + n.Scalar() + "' is not a number");
    }
    if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
    return v;
}

long long as_int(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError(where + ": expected an integer");
    try {
        return n.as<long long>();
    } catch (const YAML::Exception&) {
    }
    // 1e5 style
    double v = as_real(n, where);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(where + ": '" + n.Scalar() + "' is not an integer");
    return static_cast<long long>(v);
}

YAML::Node canon(const YAML::Node& n, Ty ty, const std::string& where) {
    switch (ty) {
        case Ty::Int: return YAML::Node(std::to_string(as_int(n, where)));
        case Ty::Real: return YAML::Node(num(as_real(n, where)));
        case Ty::Str:
            if (!n.IsScalar() && !n.IsNull()) throw ConfigError(where + ": expected a string");
            return YAML::Node(n.IsNull() ? std::string() : n.Scalar());
        case Ty::Bool: {
            if (!n.IsScalar()) throw ConfigError(where + ": expected true or false");
            try {
                return YAML::Node(n.as<bool>() ? "true" : "false");
            } catch (const YAML::Exception&) {
                throw ConfigError(where + ": expected true or false, got '" + n.Scalar() + "'");
            }
        }
        case Ty::Eigs:
            if (n.IsScalar()) {
                const std::string s = n.Scalar();
                if (s.rfind("k^-", 0) != 0) throw ConfigError(where + ": expected a list or a rule k^-p, got '" + s + "'");
                return YAML::Node(s);
            }
            [[fallthrough]];
        case Ty::Reals:
        case Ty::Ints:
        case Ty::Strs: {
            if (!n.IsSequence()) throw ConfigError(where + ": expected a list");
            YAML::Node out(YAML::NodeType::Sequence);
            out.SetStyle(YAML::EmitterStyle::Flow);
            for (std::size_t i = 0; i < n.size(); ++i) {
                const std::string w = where + "[" + std::to_string(i) + "]";
                if (ty == Ty::Strs)
                    out.push_back(canon(n[i], Ty::Str, w));
                else if (ty == Ty::Ints)
                    out.push_back(canon(n[i], Ty::Int, w));
                else
                    out.push_back(canon(n[i], Ty::Real, w));
            }
            return out;
        }
    }
    return n;
}

YAML::Node resolve_section(const YAML::Node& user, const char* sec, const std::vector<KeySpec>& schema) {
    YAML::Node u = user[sec];
    if (u && !u.IsNull() && !u.IsMap()) throw ConfigError(std::string("section '") + sec + "' must be a mapping");
    if (u && u.IsMap()) {
        for (auto it = u.begin(); it != u.end(); ++it) {
            const std::string key = it->first.as<std::string>();
            bool known = false;
            for (const auto& k : schema) known = known || key == k.key;
            if (!known) {
                std::string allowed;
                for (const auto& k : schema) allowed += std::string(allowed.empty() ? "" : ", ") + k.key;
                throw ConfigError("unknown key '" + path_of(sec, key) + "' (allowed: " + allowed + ")");
            }
        }
    }
    YAML::Node out(YAML::NodeType::Map);
    for (const auto& k : schema) {
        YAML::Node v = (u && u.IsMap() && u[k.key]) ? u[k.key] : YAML::Load(k.def);
        out[k.key] = canon(v, k.ty, path_of(sec, k.key));
    }
    return out;
}

void validate_common(const ConfigData& d) {
    SpectralModel model(model_params(d));
    const int n = model.n();
    make_nonlinearity(d, n);
    if (real(d, "nonlinearity", "M") < 0) throw ConfigError("nonlinearity.M must be nonnegative");
    if (integer(d, "run", "seed") < 0) throw ConfigError("run.seed must be nonnegative");
    if (integer(d, "run", "n_paths") < 2) throw ConfigError("run.n_paths must be at least 2");
    if (integer(d, "run", "n_inner") < 2) throw ConfigError("run.n_inner must be at least 2");
    if (!(real(d, "run", "dt") > 0)) throw ConfigError("run.dt must be positive");
    if (integer(d, "run", "min_steps") < 1) throw ConfigError("run.min_steps must be at least 1");
    if (integer(d, "run", "threads") < 0) throw ConfigError("run.threads must be nonnegative (0 = all cores)");
    if (str(d, "output", "dir").empty()) throw ConfigError("output.dir must not be empty");
    for (const auto& f : strs(d, "output", "formats"))
        if (f != "csv" && f != "json" && f != "plotdata")
            throw ConfigError("output.formats: unknown format '" + f + "' (csv, json, plotdata)");
}

void resolve(ConfigData& d) {
    if (!d.user.IsMap()) throw ConfigError("config must be a mapping with sections experiment, model, ...");
    for (auto it = d.user.begin(); it != d.user.end(); ++it) {
        const std::string key = it->first.as<std::string>();
        bool known = false;
        for (const char* s : kSections) known = known || key == s;
        if (!known) throw ConfigError("unknown section '" + key + "'");
    }
    YAML::Node r(YAML::NodeType::Map);
    r["experiment"] = resolve_section(d.user, "experiment", kExperiment);
    d.kind = r["experiment"]["kind"].Scalar();
    const KindSpec* ks = find_kind(d.kind);
    if (!ks) {
        std::string all;
        for (const auto& k : kinds()) all += std::string(all.empty() ? "" : ", ") + k.name;
        throw ConfigError("experiment.kind '" + d.kind + "' is not one of: " + all);
    }
    d.name = r["experiment"]["name"].Scalar();
    if (d.name.empty()) {
        d.name = d.kind;
        r["experiment"]["name"] = d.name;
    }
    r["model"] = resolve_section(d.user, "model", kModel);
    r["nonlinearity"] = resolve_section(d.user, "nonlinearity", kNonlinearity);
    r["run"] = resolve_section(d.user, "run", kRun);
    r["params"] = resolve_section(d.user, "params", ks->params);
    r["output"] = resolve_section(d.user, "output", kOutput);
    d.resolved = r;
    validate_common(d);
    ks->validate(d);
}

const YAML::Node node(const ConfigData& d, const char* sec, const char* key) {
    YAML::Node n = d.resolved[sec][key];
    if (!n) throw ConfigError(std::string("missing key ") + sec + "." + key);
    return n;
}

std::string emit(const YAML::Node& n) {
    YAML::Emitter e;
    e << n;
    return std::string(e.c_str()) + "\n";
}

}  // namespace

std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double real(const ConfigData& d, const char* sec, const char* key) {
    return std::stod(node(d, sec, key).Scalar());
}

long integer(const ConfigData& d, const char* sec, const char* key) {
    return std::stol(node(d, sec, key).Scalar());
}

std::string str(const ConfigData& d, const char* sec, const char* key) { return node(d, sec, key).Scalar(); }

bool boolean(const ConfigData& d, const char* sec, const char* key) { return node(d, sec, key).Scalar() == "true"; }

Vec reals(const ConfigData& d, const char* sec, const char* key) {
    Vec v;
    for (const auto& x : node(d, sec, key)) v.push_back(std::stod(x.Scalar()));
    return v;
}

std::vector<long> ints(const ConfigData& d, const char* sec, const char* key) {
    std::vector<long> v;
    for (const auto& x : node(d, sec, key)) v.push_back(std::stol(x.Scalar()));
    return v;
}

std::vector<std::string> strs(const ConfigData& d, const char* sec, const char* key) {
    std::vector<std::string> v;
    for (const auto& x : node(d, sec, key)) v.push_back(x.Scalar());
    return v;
}

SpectralModel::Params model_params(const ConfigData& d) {
    SpectralModel::Params p;
    const long n = integer(d, "model", "n");
    if (n < 1 || n > 4096) throw ConfigError("model.n must lie in 1..4096");
    p.n = int(n);
    YAML::Node e = node(d, "model", "q_eigs");
    if (e.IsScalar()) {
        const std::string s = e.Scalar().substr(3);
        try {
            std::size_t used = 0;
            p.q_power = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ConfigError("model.q_eigs: cannot read the exponent in '" + e.Scalar() + "'");
        }
    } else {
        p.q_eigs = reals(d, "model", "q_eigs");
    }
    p.beta = real(d, "model", "beta");
    p.rho = real(d, "model", "rho");
    p.trace_exponent = real(d, "model", "trace_exponent");
    p.noise_scale = real(d, "model", "noise_scale");
    return p;
}

std::unique_ptr<Nonlinearity> make_nonlinearity(const ConfigData& d, int n) {
    const std::string name = str(d, "nonlinearity", "name");
    if (name == "zero") return make_zero(n);
    if (name != "radial") throw ConfigError("nonlinearity.name '" + name + "' is not one of: zero, radial");
    const std::string kind = str(d, "nonlinearity", "kind");
    RadialNonlinearity::Kind k;
    if (kind == "fixed")
        k = RadialNonlinearity::Kind::Fixed;
    else if (kind == "scaled")
        k = RadialNonlinearity::Kind::Scaled;
    else
        throw ConfigError("nonlinearity.kind '" + kind + "' is not one of: fixed, scaled");
    return std::make_unique<RadialNonlinearity>(n, k, real(d, "nonlinearity", "c"),
                                                int(integer(d, "nonlinearity", "v_index")),
                                                real(d, "nonlinearity", "M"));
}

}  // namespace detail

// ---- ExperimentConfig -----------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    c.d_ = std::make_shared<detail::ConfigData>();
    c.d_->source = text;
    try {
        c.d_->user = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    detail::resolve(*c.d_);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("override '" + key + "' must be section.key");
    const std::string sec = key.substr(0, dot), k = key.substr(dot + 1);
    YAML::Node v;
    try {
        v = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError("override " + key + ": " + e.what());
    }
    // copy first: a failed override must leave the config unchanged
    auto next = std::make_shared<detail::ConfigData>();
    next->source = d_->source;
    next->user = YAML::Clone(d_->user);
    if (!next->user[sec] || next->user[sec].IsNull()) next->user[sec] = YAML::Node(YAML::NodeType::Map);
    next->user[sec][k] = v;
    detail::resolve(*next);
    d_ = next;
}

std::string ExperimentConfig::kind() const { return d_->kind; }
std::string ExperimentConfig::name() const { return d_->name; }
std::uint64_t ExperimentConfig::seed() const { return std::uint64_t(detail::integer(*d_, "run", "seed")); }
int ExperimentConfig::threads() const { return int(detail::integer(*d_, "run", "threads")); }
std::string ExperimentConfig::output_dir() const { return detail::str(*d_, "output", "dir"); }
std::vector<std::string> ExperimentConfig::formats() const { return detail::strs(*d_, "output", "formats"); }

std::string ExperimentConfig::dump() const { return detail::emit(d_->resolved); }

std::string ExperimentConfig::hash() const {
    YAML::Node r = YAML::Clone(d_->resolved);
    r.remove("output");
    r["run"].remove("threads");
    return sha1_hex(detail::emit(r));
}

std::string ExperimentConfig::input_hash() const { return git_blob_hash(d_->source); }

// ---- hashing / threads ----------------------------------------------------

std::string sha1_hex(const std::string& bytes) {
    boost::uuids::detail::sha1 h;
    h.process_bytes(bytes.data(), bytes.size());
    boost::uuids::detail::sha1::digest_type dg;
    h.get_digest(dg);
    char buf[41];
    for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", dg[i]);
    return std::string(buf, 40);
}

std::string git_blob_hash(const std::string& bytes) {
    std::string s = "blob " + std::to_string(bytes.size());
    s.push_back('\0');
    return sha1_hex(s + bytes);
}

int resolve_threads(int cli_flag, int config_value) {
    if (cli_flag > 0) return cli_flag;
    if (const char* e = std::getenv("SPDELAB_THREADS"); e && *e) {
        char* end = nullptr;
        long v = std::strtol(e, &end, 10);
        if (end != e && *end == '\0' && v >= 0 && v < 4096) {
            if (v > 0) return int(v);
        } else {
            throw ConfigError(std::string("SPDELAB_THREADS='") + e + "' is not a thread count");
        }
    }
    return config_value > 0 ? config_value : 0;
}

}  // namespace spdelab
