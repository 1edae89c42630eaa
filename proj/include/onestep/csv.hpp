#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "onestep/bootstrap.hpp"
#include "onestep/core.hpp"
#include "onestep/dpmm.hpp"

// CSV interchange: UTF-8, '.' decimal point, no thousands separators, one
// header line. Values are written with 17 significant digits so every
// double round-trips exactly; all writes go through a write-to-temp /
// atomic-rename path so a failed command never leaves a partial file.
namespace onestep::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads and splits a CSV file; throws a parse error naming file and line.
Table read_table(const std::string& path);

/// Strict double parse of one cell; throws a parse error naming file/line.
double parse_cell(const std::string& cell, const std::string& path, std::size_t line);

/// Round-trip formatting (17 significant digits).
std::string format_value(double v);

/// Writes text to path via a temporary sibling file and rename.
void atomic_write_text(const std::string& path, const std::string& text);

// Typed formats. Headers are fixed contracts:
//   univariate        z
//   causal            x_1,...,x_d,a,y          (empty y cell = missing)
//   influence         plugin,psi_1,...,psi_n
//   corrected draws   draw,value
//   mixture draws     sigma,w_1..w_H,mu_1..mu_H
UnivariateData read_univariate(const std::string& path);
void write_univariate(const std::string& path, const UnivariateData& data);

CausalData read_causal(const std::string& path);
void write_causal(const std::string& path, const CausalData& data);

InfluenceMatrix read_influence(const std::string& path, const std::string& functional_id);
void write_influence(const std::string& path, const InfluenceMatrix& infl);

void write_corrected(const std::string& path, const CorrectedDraws& draws);

std::vector<dpmm::MixtureDraw> read_mixtures(const std::string& path);
void write_mixtures(const std::string& path, std::span<const dpmm::MixtureDraw> draws);

}  // namespace onestep::csv
