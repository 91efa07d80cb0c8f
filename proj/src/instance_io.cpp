#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nrm/errors.hpp"
#include "nrm/model.hpp"

namespace nrm {

namespace {

using nlohmann::json;

const json& require(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end()) throw ParseError(std::string("instance: missing field \"") + field + "\"");
    return *it;
}

template <typename T>
T get_as(const json& node, const std::string& field) {
    try {
        return node.get<T>();
    } catch (const json::exception& e) {
        throw ParseError("instance: field \"" + field + "\" has the wrong type (" + e.what() + ")");
    }
}

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k)
        if (text[k] == '\n') ++line;
    return line;
}

}  // namespace

Instance parse_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("instance: malformed JSON at line " + std::to_string(line_of_offset(text, e.byte)) + ": " +
                         e.what());
    }
    if (!doc.is_object()) throw ParseError("instance: top level must be an object");

    const int legs = get_as<int>(require(doc, "num_legs"), "num_legs");
    const int products = get_as<int>(require(doc, "num_products"), "num_products");
    const int horizon = get_as<int>(require(doc, "horizon"), "horizon");
    auto capacities = get_as<std::vector<int>>(require(doc, "capacities"), "capacities");
    auto fares = get_as<std::vector<double>>(require(doc, "fares"), "fares");
    auto consumption = get_as<std::vector<std::vector<int>>>(require(doc, "consumption"), "consumption");
    const json& probs = require(doc, "arrival_probs");
    std::string name = doc.value("name", std::string{});

    if (legs < 1) throw ValidationError("num_legs must be positive");
    if (products < 1) throw ValidationError("num_products must be positive");
    if (horizon < 1) throw ValidationError("horizon must be positive");
    if (static_cast<int>(capacities.size()) != legs)
        throw ValidationError("capacities must have num_legs entries");
    if (static_cast<int>(fares.size()) != products) throw ValidationError("fares must have num_products entries");
    if (static_cast<int>(consumption.size()) != products)
        throw ValidationError("consumption must have num_products entries");

    if (!probs.is_object()) throw ParseError("instance: field \"arrival_probs\" must be an object");
    if (probs.contains("stationary")) {
        auto row = get_as<std::vector<double>>(probs["stationary"], "arrival_probs.stationary");
        return Instance::stationary(std::move(capacities), std::move(fares), std::move(consumption), std::move(row),
                                    horizon, std::move(name));
    }
    if (probs.contains("per_period")) {
        auto rows = get_as<std::vector<std::vector<double>>>(probs["per_period"], "arrival_probs.per_period");
        if (static_cast<int>(rows.size()) != horizon)
            throw ValidationError("arrival_probs.per_period must have horizon rows");
        return Instance(std::move(capacities), std::move(fares), std::move(consumption), std::move(rows),
                        std::move(name));
    }
    throw ParseError("instance: field \"arrival_probs\" needs \"stationary\" or \"per_period\"");
}

std::string dump_instance(const Instance& inst) {
    json doc;
    if (!inst.name().empty()) doc["name"] = inst.name();
    doc["num_legs"] = inst.num_legs();
    doc["num_products"] = inst.num_products();
    doc["horizon"] = inst.horizon();
    doc["capacities"] = inst.capacities();
    doc["fares"] = inst.fares();
    json cons = json::array();
    for (int j = 0; j < inst.num_products(); ++j) cons.push_back(inst.legs_of(j));
    doc["consumption"] = cons;
    if (inst.is_stationary()) {
        doc["arrival_probs"] = {{"stationary", inst.probs(1)}};
    } else {
        json rows = json::array();
        for (int t = 1; t <= inst.horizon(); ++t) rows.push_back(inst.probs(t));
        doc["arrival_probs"] = {{"per_period", rows}};
    }
    // nlohmann prints doubles with round-trip precision.
    return doc.dump(2) + "\n";
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("instance: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_instance(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("instance: cannot write " + path.string());
    out << dump_instance(inst);
}

std::uint64_t instance_hash(const Instance& inst) {
    // The display name does not take part in the identity.
    json doc = json::parse(dump_instance(inst));
    doc.erase("name");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace nrm
