#pragma once

// Sample batch files and fit reports.
//
// CSV batches hold one matrix per row as its upper triangle in row-major
// order under a header t11,t12,...,tmm. JSON batches are either a bare array
// of matrices or an object with "matrices" and optional "provenance".

#include <iosfwd>
#include <string>

#include "gbs/fit.hpp"
#include "gbs/sample.hpp"

namespace gbs {

/// Shortest round-trippable form (17 significant digits).
std::string format_double(double x);

SampleBatch read_batch_csv(std::istream& in, const std::string& source = "<csv>");
void write_batch_csv(const SampleBatch& batch, std::ostream& out);
SampleBatch read_batch_json(std::istream& in, const std::string& source = "<json>");
void write_batch_json(const SampleBatch& batch, std::ostream& out);

/// Dispatches on the extension: ".json" is JSON, anything else is CSV.
SampleBatch read_batch(const std::string& path);
void write_batch(const SampleBatch& batch, const std::string& path);

/// Upper triangle, row-major.
RealVector upper_triangle(const RealMatrix& a);
RealMatrix from_upper_triangle(const RealVector& entries, int m);
/// m with m(m+1)/2 == count, or -1.
int dim_from_triangle_count(std::size_t count);

std::string to_string(Convention convention);

std::string fit_result_json(const FitResult& fit, int n);
std::string fit_result_text(const FitResult& fit, int n);
std::string profile_json(const ProfileTable& table);
/// Table-1 layout: s, beta, upper triangle of Xi, r, q, BIC* difference,
/// led by the Gaussian baseline row, then a block of evidence grades.
std::string profile_text(const ProfileTable& table);

}  // namespace gbs
