#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "microloc/calculus.hpp"
#include "microloc/escape.hpp"
#include "microloc/hamilton.hpp"
#include "microloc/propagation.hpp"
#include "microloc/wavefront.hpp"

namespace microloc {

using Json = nlohmann::ordered_json;

// Fixed-format float text so CSV artifacts are byte-identical across reruns.
std::string fmt(double v);

Json to_json(const ResidualReport& r);
Json to_json(const ConstantReport& r);
Json to_json(const ControlCertificate& c);
Json to_json(const SignReport& r);
Json to_json(const EstimateReport& r);
Json to_json(const LadderReport& r);
Json to_json(const IdentityReport& r);
Json to_json(const CommutatorBoundReport& r);
Json to_json(const RegReport& r);
Json to_json(const SobolevEstimate& e);
Json to_json(const CalibrationTable& t);
Json to_json(const OrderReport& r);

void write_text(const std::string& path, const std::string& content);

std::string csv_of(const ResidualReport& r);
std::string csv_of(const ConstantReport& r);
std::string csv_of(const ControlCertificate& c);
std::string csv_of(const EstimateReport& r);
std::string csv_of(const LadderReport& r);
std::string csv_of(const RegReport& r);
std::string scan_csv(const std::vector<SobolevEstimate>& scan);
std::string sign_samples_csv(const EscapeBundle& bundle, double gamma,
                             const SignSampleSpec& spec);
std::string witness_csv(const std::vector<std::array<double, 5>>& rows);

uint64_t fnv64(const std::string& bytes);

}  // namespace microloc
