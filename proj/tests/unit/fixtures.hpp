#pragma once

#include <string>

#include "synlik/network.hpp"

namespace synlik::test {

inline const char* kHeatShock = R"(species: P1 P2 R1
volume: 50
initial: 50 50 50
0 -> P1 @ k1=1
0 -> P2 @ k2=0
P1 -> R1 @ k3=1
P2 -> R1 @ k4=0
P1 -> P1 + P2 @ k5=0
P2 -> P1 + P2 @ k6=1
R1 -> P2 @ k7=0
R1 -> 2R1 @ k8=0
R1 + P2 -> 0 @ k9=0.5
R1 -> 0 @ k10=1
P1 -> 0 @ k11=1
P2 -> 0 @ k12=1
)";

inline const char* kEyam = R"(species: S I
volume: 613
initial: 612 1
S + I -> 2I @ k1=5.3
I -> 0 @ k2=4.22
S -> 0 @ k3=0
)";

inline ReactionNetwork heat_shock() { return parse_network(kHeatShock); }
inline ReactionNetwork eyam() { return parse_network(kEyam); }

inline ReactionNetwork single(const std::string& reaction, double volume = 1.0, const std::string& species = "A") {
  return parse_network("species: " + species + "\nvolume: " + std::to_string(volume) + "\n" + reaction + "\n");
}

}  // namespace synlik::test
