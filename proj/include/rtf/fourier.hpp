#pragma once

#include "rtf/step_function.hpp"

namespace rtf {

// Symmetric pairing on F^dim given by an integral matrix that is unimodular
// on L0 (true for the trace form on sl2 coordinates when p is odd).
struct PairingForm {
    int dim;
    std::vector<std::vector<long>> gram; // <x,y> = x^T gram y

    static PairingForm standard_line();   // <x,y> = xy on F
    static PairingForm sl2_trace_form();  // 2hh' + bc' + cb' on (h,b,c)
};

// f_hat(Y) = integral of f(X) psi(<X,Y>) dX with the self-dual measure
// vol(L0) = 1.  Each input coset transforms to vol * psi(<center,.>) on the
// dual coset; the character factor is folded into coefficients by
// subdividing the dual lattice, which is where cyclotomic coefficients
// enter.  Satisfies f_hat_hat(X) = f(-X).
StepFunction fourier_transform(const StepFunction& f, const PairingForm& form,
                               const Budgets& budgets = Budgets{});

// Character depth needed to transform f with this pairing.
int required_character_depth(const StepFunction& f, const PairingForm& form);

} // namespace rtf
