// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "spdelab/harness.hpp"
#include "spdelab/nonlinearity.hpp"

namespace spdelab::detail {

enum class Ty { Int, Real, Str, Bool, Reals, Ints, Strs, Eigs };

struct KeySpec {
    const char* key;
    Ty ty;
    const char* def;   // YAML text of the default
};

struct ConfigData {
    YAML::Node user;       // as written, plus set() overrides
    YAML::Node resolved;   // canonical, every default filled in
    std::string source;
    std::string kind, name;
};

struct KindSpec {
    const char* name;
    std::vector<KeySpec> params;
    void (*validate)(const ConfigData&);
    void (*run)(const ConfigData&, ResultRecord&);
};

const std::vector<KindSpec>& kinds();
const KindSpec* find_kind(const std::string& name);

// typed reads from the resolved tree; sec is "model", "params", ...
double real(const ConfigData& d, const char* sec, const char* key);
long integer(const ConfigData& d, const char* sec, const char* key);
std::string str(const ConfigData& d, const char* sec, const char* key);
bool boolean(const ConfigData& d, const char* sec, const char* key);
Vec reals(const ConfigData& d, const char* sec, const char* key);
std::vector<long> ints(const ConfigData& d, const char* sec, const char* key);
std::vector<std::string> strs(const ConfigData& d, const char* sec, const char* key);

SpectralModel::Params model_params(const ConfigData& d);
std::unique_ptr<Nonlinearity> make_nonlinearity(const ConfigData& d, int n);

// "%.17g"-free shortest round-trip text
std::string num(double v);

}  // namespace spdelab::detail
