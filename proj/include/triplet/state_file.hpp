#pragma once

#include <string>

#include "triplet/gaussian.hpp"
#include "triplet/kv.hpp"

namespace triplet {

// State specification files describe a WidthSpec or a mixture of them:
//
//   sigma = [inf, 1, 1]
//   correlations = [{pair = [1, 2], sigma_c = 0}]
//   mean = [0, 0, 0]            # optional per-particle offsets
//
// or
//
//   mixture = [
//     {weight = 0.5, state = {sigma = [inf, 1, 1],
//                             correlations = [{pair = [1, 2], sigma_c = 0}]}},
//     {weight = 0.5, state = {sigma = [inf, 1, 1],
//                             correlations = [{pair = [1, 3], sigma_c = 0}]}},
//   ]

namespace detail {

inline Vec3 parse_vec3(const kv::Value& v, const std::string& what) {
    if (!v.is_list() || v.list().size() != 3)
        throw std::runtime_error("state file: " + what + " must be a list of three numbers");
    Vec3 out{};
    for (int k = 0; k < 3; ++k) out[static_cast<std::size_t>(k)] = v.list()[static_cast<std::size_t>(k)].number();
    return out;
}

inline WidthSpec parse_width_spec(const kv::Table& t) {
    WidthSpec spec;
    auto it = t.find("sigma");
    if (it == t.end()) throw std::runtime_error("state file: missing 'sigma'");
    spec.sigma = parse_vec3(it->second, "sigma");

    if (auto ct = t.find("correlations"); ct != t.end()) {
        for (const auto& entry : ct->second.list()) {
            const kv::Table& c = entry.table();
            auto pt = c.find("pair");
            auto st = c.find("sigma_c");
            if (pt == c.end() || st == c.end())
                throw std::runtime_error("state file: each correlation needs 'pair' and 'sigma_c'");
            if (!pt->second.is_list() || pt->second.list().size() != 2)
                throw std::runtime_error("state file: 'pair' must be a list of two particle indices");
            Correlation corr;
            corr.i = static_cast<int>(pt->second.list()[0].number());
            corr.j = static_cast<int>(pt->second.list()[1].number());
            corr.sigma_c = st->second.number();
            spec.correlations.push_back(corr);
        }
    }
    spec.validate();
    return spec;
}

}  // namespace detail

inline GaussianMixture parse_state(const kv::Table& doc) {
    GaussianMixture mix;
    if (auto mt = doc.find("mixture"); mt != doc.end()) {
        for (const auto& entry : mt->second.list()) {
            const kv::Table& c = entry.table();
            auto wt = c.find("weight");
            auto st = c.find("state");
            if (wt == c.end() || st == c.end())
                throw std::runtime_error("state file: each mixture entry needs 'weight' and 'state'");
            MixtureComponent comp;
            comp.weight = wt->second.number();
            comp.state = detail::parse_width_spec(st->second.table());
            if (auto mn = st->second.table().find("mean"); mn != st->second.table().end())
                comp.mean = detail::parse_vec3(mn->second, "mean");
            mix.components.push_back(std::move(comp));
        }
    } else {
        MixtureComponent comp;
        comp.state = detail::parse_width_spec(doc);
        if (auto mn = doc.find("mean"); mn != doc.end())
            comp.mean = detail::parse_vec3(mn->second, "mean");
        mix.components.push_back(std::move(comp));
    }
    mix.validate();
    return mix;
}

inline GaussianMixture load_state_file(const std::string& path) {
    return parse_state(kv::parse_file(path));
}

}  // namespace triplet
