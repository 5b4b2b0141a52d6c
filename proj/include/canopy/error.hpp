#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace canopy {

// Base for every error the library raises. Callers that only care about
// "something in the pipeline failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- raster-io ------------------------------------------------------------

// Both raster decode errors carry the byte offset where decoding stopped.
class RasterError : public Error {
public:
    RasterError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class UnsupportedFeature : public RasterError {
public:
    UnsupportedFeature(const std::string& feature, std::uint64_t offset)
        : RasterError("unsupported TIFF feature: " + feature, offset) {}
};

class Malformed : public RasterError {
public:
    Malformed(const std::string& reason, std::uint64_t offset)
        : RasterError("malformed raster: " + reason, offset) {}
};

// ---- grid-core ------------------------------------------------------------

class DisjointExtents : public Error {
public:
    DisjointExtents() : Error("grids do not overlap") {}
};

class CrsMismatch : public Error {
public:
    CrsMismatch(const std::string& a, const std::string& b)
        : Error("CRS mismatch: '" + a + "' vs '" + b + "'") {}
};

// Raised for structurally invalid in-memory inputs (size mismatches, bad
// parameters). Not a decode error.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// ---- spectral / crowns ----------------------------------------------------

class EmptySignatureSet : public Error {
public:
    EmptySignatureSet() : Error("at least one spectral signature is required") {}
};

class MarkerOutsideCanopy : public Error {
public:
    MarkerOutsideCanopy(int col, int row)
        : Error("treetop marker at (" + std::to_string(col) + ", " + std::to_string(row) +
                ") lies below the minimum tree height") {}
};

// ---- allometry / spatial / economics --------------------------------------

class NegativeInput : public Error {
public:
    explicit NegativeInput(const std::string& field) : Error("negative input: " + field) {}
};

class TooFewPlots : public Error {
public:
    TooFewPlots(std::size_t have, std::size_t need)
        : Error("too few ground plots: " + std::to_string(have) + " < " + std::to_string(need)) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& why) : Error("singular kriging system: " + why) {}
};

class NonPositiveVariance : public Error {
public:
    NonPositiveVariance() : Error("ensemble component variance must be > 0") {}
};

class NonPositive : public Error {
public:
    explicit NonPositive(const std::string& field) : Error(field + " must be > 0") {}
};

}  // namespace canopy
