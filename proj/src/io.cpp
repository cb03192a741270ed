#include "kelab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kelab/errors.hpp"

namespace kelab::io {

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read error on '" + path + "'");
    return os.str();
}

void writeFile(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write error on '" + path + "'");
}

void ensureDirectory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir + "'");
}

std::string csvNumber(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json gridToJson(const SGrid& g) { return {{"s_min", g.s_min}, {"s_max", g.s_max}, {"n", g.n}}; }

SGrid gridFromJson(const json& j) {
    try {
        return SGrid::make(j.at("s_min").get<double>(), j.at("s_max").get<double>(),
                           j.at("n").get<int>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed grid: ") + e.what());
    } catch (const ConfigError& e) {
        throw ValidationError(e.what());
    }
}

json potentialToJson(const ReducedPotential& u) {
    return {{"grid", gridToJson(u.grid)},
            {"values", u.values},
            {"slopes", {u.slope_left, u.slope_right}}};
}

ReducedPotential potentialFromJson(const json& j) {
    ReducedPotential u;
    try {
        u.grid = gridFromJson(j.at("grid"));
        u.values = j.at("values").get<std::vector<double>>();
        const auto sl = j.at("slopes").get<std::vector<double>>();
        if (sl.size() != 2) throw ValidationError("slopes must have two entries");
        u.slope_left = sl[0];
        u.slope_right = sl[1];
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed potential: ") + e.what());
    }
    u.validate();
    return u;
}

ReducedPotential loadPotential(const std::string& path) {
    const std::string text = readFile(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
    return potentialFromJson(j);
}

void savePotential(const std::string& path, const ReducedPotential& u) {
    writeFile(path, potentialToJson(u).dump(1) + "\n");
}

json spectralPackToJson(const SpectralPack& pack, const std::vector<double>& coefficients) {
    json j = {{"k", pack.k}, {"eigenvalues", pack.eigenvalues}};
    if (!coefficients.empty()) j["coefficients"] = coefficients;
    return j;
}

std::string eigenfunctionsCsv(const SpectralPack& pack) {
    std::string out = "s";
    for (int i = 1; i <= pack.k; ++i) out += ",e" + std::to_string(i);
    out += "\n";
    if (pack.eigenfunctions.empty()) return out;
    const SGrid& g = pack.eigenfunctions.front().grid;
    for (int q = 0; q < g.n; ++q) {
        out += csvNumber(g.s(q));
        for (const auto& e : pack.eigenfunctions) out += "," + csvNumber(e.values[q]);
        out += "\n";
    }
    return out;
}

}  // namespace kelab::io

namespace kelab {

std::string SpacetimePotential::serialize() const {
    io::json head = {{"format", "kelab-spacetime"},
                     {"epsilon", epsilon},
                     {"grid", io::gridToJson(grid)},
                     {"t_grid", t_grid},
                     {"background", io::potentialToJson(background)}};
    std::string out = head.dump() + "\n";
    out += "t";
    for (int i = 0; i < grid.n; ++i) out += ",u" + std::to_string(i);
    out += "\n";
    for (int j = 0; j < m(); ++j) {
        out += io::csvNumber(t_grid[j]);
        for (double v : values[j]) out += "," + io::csvNumber(v);
        out += "\n";
    }
    return out;
}

SpacetimePotential SpacetimePotential::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("spacetime file: empty");
    SpacetimePotential sp;
    try {
        const auto head = io::json::parse(line);
        if (head.at("format") != "kelab-spacetime") throw ValidationError("spacetime file: bad format tag");
        sp.epsilon = head.at("epsilon").get<double>();
        sp.grid = io::gridFromJson(head.at("grid"));
        sp.t_grid = head.at("t_grid").get<std::vector<double>>();
        sp.background = io::potentialFromJson(head.at("background"));
    } catch (const io::json::exception& e) {
        throw ValidationError(std::string("spacetime file: malformed header: ") + e.what());
    }
    if (!std::getline(is, line) || line.rfind("t,", 0) != 0)
        throw ValidationError("spacetime file: missing column header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.c_str();
        char* end = nullptr;
        std::strtod(p, &end);  // t column
        if (end == p) throw ValidationError("spacetime file: bad row");
        p = end;
        while (*p == ',') {
            ++p;
            const double v = std::strtod(p, &end);
            if (end == p) throw ValidationError("spacetime file: bad number");
            row.push_back(v);
            p = end;
        }
        if (static_cast<int>(row.size()) != sp.grid.n)
            throw ValidationError("spacetime file: row length does not match grid");
        sp.values.push_back(std::move(row));
    }
    if (sp.values.size() != sp.t_grid.size())
        throw ValidationError("spacetime file: row count does not match t grid");
    return sp;
}

}  // namespace kelab
