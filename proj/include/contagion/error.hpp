#pragma once

#include <stdexcept>
#include <string>

namespace contagion {

enum class Errc {
    out_of_order,
    bad_target,
    bad_event,
    entry_robot_queried,
    action_not_permitted,
    not_carrier,
    not_entry_robot,
    endpoint_unreachable,
    parse_failure,
    config_invalid,
    invalid_relay,
    not_feasible,
    not_confirmed,
    no_attack_inputs,
    zero_reachable_mass,
    empty_footprint,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::out_of_order: return "out_of_order";
        case Errc::bad_target: return "bad_target";
        case Errc::bad_event: return "bad_event";
        case Errc::entry_robot_queried: return "entry_robot_queried";
        case Errc::action_not_permitted: return "action_not_permitted";
        case Errc::not_carrier: return "not_carrier";
        case Errc::not_entry_robot: return "not_entry_robot";
        case Errc::endpoint_unreachable: return "endpoint_unreachable";
        case Errc::parse_failure: return "parse_failure";
        case Errc::config_invalid: return "config_invalid";
        case Errc::invalid_relay: return "invalid_relay";
        case Errc::not_feasible: return "not_feasible";
        case Errc::not_confirmed: return "not_confirmed";
        case Errc::no_attack_inputs: return "no_attack_inputs";
        case Errc::zero_reachable_mass: return "zero_reachable_mass";
        case Errc::empty_footprint: return "empty_footprint";
        case Errc::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace contagion
