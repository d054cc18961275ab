#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "npp/io.hpp"

namespace npp {

namespace detail {

inline json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Sequence: {
            json a = json::array();
            for (const auto& x : n) a.push_back(yaml_to_json(x));
            return a;
        }
        case YAML::NodeType::Map: {
            json o = json::object();
            for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return o;
        }
        case YAML::NodeType::Scalar:
            break;
    }
    const auto& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted scalar stays a string
    long long i;
    double d;
    bool b;
    if (YAML::convert<long long>::decode(n, i)) return i;
    if (YAML::convert<double>::decode(n, d)) return d;
    if (YAML::convert<bool>::decode(n, b)) return b;
    return s;
}

}  // namespace detail

/// Parses YAML or JSON text into a JSON tree (JSON is valid YAML, but is read directly when it looks like JSON).
inline json parse_config_text(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw config_error(std::string("invalid JSON: ") + e.what());
        }
    }
    try {
        return detail::yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw config_error(std::string("invalid YAML: ") + e.what());
    }
}

inline json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace npp
