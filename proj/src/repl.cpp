#include "emd/repl.hpp"

#include <istream>
#include <ostream>

#include "emd/tracker.hpp"

namespace emd {

namespace {

void print_state(std::ostream& out, const BeliefState& state) {
  if (state.empty()) {
    out << "state: (empty)\n";
    return;
  }
  out << "state:";
  for (const auto& t : state.triplets()) out << " " << triplet_to_string(t);
  out << "\n";
}

}  // namespace

void repl(TurnPredictor& predictor, std::istream& in, std::ostream& out, bool echo_input) {
  TrackSession session;
  std::string sys, usr;
  bool have_sys = false;
  std::string line;
  while (true) {
    out << (have_sys ? "usr> " : "sys> ");
    out.flush();
    if (!std::getline(in, line)) {
      if (echo_input) out << "\n";
      break;
    }
    if (echo_input) out << line << "\n";
    if (line == ":quit") break;
    if (line == ":reset") {
      session = TrackSession{};
      have_sys = false;
      out << "reset.\n";
      continue;
    }
    if (line == ":state") {
      print_state(out, session.belief);
      continue;
    }
    if (!have_sys) {
      sys = line;
      have_sys = true;
      continue;
    }
    usr = line;
    have_sys = false;
    TurnOutcome outcome = track_turn(session, sys, usr, predictor);
    out << "[turn " << session.turn_index - 1 << "] domain=" << outcome.domain << "\n";
    for (const auto& t : outcome.added) out << "  + " << triplet_to_string(t) << "\n";
    for (const auto& t : outcome.removed) out << "  - " << triplet_to_string(t) << "\n";
    out << "  ";
    print_state(out, outcome.state);
  }
}

}  // namespace emd
