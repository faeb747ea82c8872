#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "qtt/tt.hpp"

namespace qtt {

inline nlohmann::json to_json(const TTFunction& f) {
    nlohmann::json j;
    j["b"] = f.params.b;
    j["L"] = f.params.L;
    j["D"] = f.params.D;
    j["m"] = f.m;
    j["basis"] = f.basis;
    j["cores"] = nlohmann::json::array();
    for (const Core& c : f.cores) {
        nlohmann::json jc;
        jc["left"] = c.left;
        jc["mode"] = c.mode;
        jc["right"] = c.right;
        jc["entries"] = c.entries;
        j["cores"].push_back(std::move(jc));
    }
    return j;
}

inline TTFunction tt_from_json(const nlohmann::json& j) {
    TTFunction f;
    f.params.b = j.at("b").get<int>();
    f.params.L = j.at("L").get<int>();
    f.params.D = j.at("D").get<int>();
    f.m = j.at("m").get<int>();
    f.basis = j.at("basis").get<std::string>();
    for (const auto& jc : j.at("cores")) {
        Core c(jc.at("left").get<int>(), jc.at("mode").get<int>(), jc.at("right").get<int>());
        c.entries = jc.at("entries").get<std::vector<double>>();
        if (c.entries.size() != static_cast<size_t>(c.left) * c.mode * c.right)
            throw std::invalid_argument("tt_from_json: entry count mismatch");
        f.cores.push_back(std::move(c));
    }
    f.validate();
    return f;
}

inline void save_tt(const TTFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_tt: cannot open " + path);
    out << to_json(f).dump(2) << "\n";
}

inline TTFunction load_tt(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tt: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return tt_from_json(j);
}

} // namespace qtt
