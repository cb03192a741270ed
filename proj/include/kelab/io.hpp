#pragma once

#include <string>

#include <json.hpp>

#include "kelab/geodesic.hpp"
#include "kelab/spectral.hpp"

namespace kelab::io {

using json = nlohmann::json;

std::string readFile(const std::string& path);
// Writes atomically enough for our purposes; IoError on failure.
void writeFile(const std::string& path, const std::string& text);
void ensureDirectory(const std::string& dir);

json gridToJson(const SGrid& g);
SGrid gridFromJson(const json& j);

json potentialToJson(const ReducedPotential& u);
// Validates the potential; ValidationError on malformed or invalid input.
ReducedPotential potentialFromJson(const json& j);
ReducedPotential loadPotential(const std::string& path);
void savePotential(const std::string& path, const ReducedPotential& u);

json spectralPackToJson(const SpectralPack& pack, const std::vector<double>& coefficients = {});
std::string eigenfunctionsCsv(const SpectralPack& pack);

std::string csvNumber(double v);

}  // namespace kelab::io
