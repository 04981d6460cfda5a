#pragma once

#include <iosfwd>

#include "emd/predictor.hpp"

namespace emd {

// Interactive tracking loop. Reads alternating system/user lines, prints the
// predicted domain, decoded triplets, correction removals and cumulative
// state after each turn. Commands on their own line: :reset, :state, :quit.
// With echo_input the consumed lines are printed after their prompts, so a
// piped script yields a self-contained transcript.
void repl(TurnPredictor& predictor, std::istream& in, std::ostream& out, bool echo_input);

}  // namespace emd
