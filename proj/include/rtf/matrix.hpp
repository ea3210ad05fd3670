#pragma once

#include "rtf/field.hpp"

#include <string>

namespace rtf {

struct LieVec; // trace-zero 2x2, below

// Element of SL2(F).  Entries are exact scalars; det = 1 is asserted where
// matrices are constructed from user input.
struct Mat2 {
    PAdic a, b, c, d;

    const FieldContext* ctx() const { return a.ctx(); }
    static Mat2 identity(const FieldContext* ctx);
    static Mat2 diag(const PAdic& t1, const PAdic& t2);
    static Mat2 upper_unipotent(const PAdic& x); // (1 x; 0 1)
    static Mat2 lower_unipotent(const PAdic& x); // (1 0; x 1)

    Mat2 operator*(const Mat2& o) const;
    Mat2 inverse() const; // uses det exactly
    PAdic det() const;
    bool operator==(const Mat2& o) const;
    std::string to_string() const;
};

// theta = Inn diag(1,-1)
Mat2 theta(const Mat2& g);
// tau(g) = theta(g)^{-1} g
Mat2 tau(const Mat2& g);

// (h, b; c, -h)
struct LieVec {
    PAdic h, b, c;
    const FieldContext* ctx() const { return h.ctx(); }
    std::string to_string() const;
};

// g^{-1} X g, exact.
LieVec adjoint_on(const Mat2& g, const LieVec& X);

// Cartan invariant: the nonnegative integer m with g in K diag(p^-m, p^m) K,
// equal to -min entry valuation.
long cartan_invariant(const Mat2& g);

// omega-bar(g, mu) = [Cartan tau(g) <= mu]
bool truncation_indicator(const Mat2& g, long mu);

// Coordinate frames for Iwasawa decompositions.  Bprime: standard
// coordinates, torus H diagonal.  B / Bbar: coordinates conjugated by
// u = (1 1; 1 -1), which takes the torus A = {(a b; b a)} to the diagonal
// torus; B is the upper Borel there and Bbar the lower.
enum class Frame { Bprime, B, Bbar };

Frame parse_frame(const std::string& name);

// Base change into u-coordinates (and back).
Mat2 to_u_frame(const Mat2& g);
Mat2 from_u_frame(const Mat2& g);
LieVec lie_to_u_frame(const LieVec& X);

struct IwasawaData {
    long H;          // valuation of the torus part
    Mat2 t, n, k;    // g = t n k in the frame's coordinates (n unipotent
                     // upper for B/Bprime, lower for Bbar)
};

// Decomposes g (standard coordinates) in the given frame; the witnesses are
// frame-coordinate matrices reconstructing the frame image of g exactly.
IwasawaData iwasawa(const Mat2& g, Frame frame);

struct Heights {
    long H_B;     // upper height in the frame's coordinates
    long H_Bbar;  // lower height
    long d;       // max(|H_B|, |H_Bbar|)
};

// Both heights for the coordinate system the frame lives in (B and Bbar
// share u-coordinates; Bprime heights are taken in standard coordinates).
Heights iwasawa_heights(const Mat2& g, Frame frame);

// r_gamma for gamma in K' (index into FourthPowerClasses::square_reps),
// standard coordinates.
Mat2 r_gamma(const FieldContext& ctx, int square_class_index);

} // namespace rtf
