#pragma once

#include <complex>

#include <nlohmann/json.hpp>

#include "readoutsim/optimizer.hpp"
#include "readoutsim/protocols.hpp"

namespace nlohmann {
template <>
struct adl_serializer<std::complex<double>> {
    static void to_json(json& j, const std::complex<double>& z) { j = json::array({z.real(), z.imag()}); }
    static void from_json(const json& j, std::complex<double>& z) {
        z = {j.at(0).get<double>(), j.at(1).get<double>()};
    }
};
}  // namespace nlohmann

namespace rsim {

using Json = nlohmann::json;

void to_json(Json& j, const DeviceParams& d);
void from_json(const Json& j, DeviceParams& d);
void to_json(Json& j, const AmplifierChain& c);
void from_json(const Json& j, AmplifierChain& c);
void to_json(Json& j, const PreparationModel& p);
void from_json(const Json& j, PreparationModel& p);
void to_json(Json& j, const ReadoutPulse& p);
void from_json(const Json& j, ReadoutPulse& p);
void to_json(Json& j, const FilterSpec& f);
void from_json(const Json& j, FilterSpec& f);
void to_json(Json& j, const ThresholdFit& t);
void from_json(const Json& j, ThresholdFit& t);
void to_json(Json& j, const DiscriminationReport& r);
void from_json(const Json& j, DiscriminationReport& r);
void to_json(Json& j, const Histogram& h);
void from_json(const Json& j, Histogram& h);
void to_json(Json& j, const CalibratedReadout& c);
void from_json(const Json& j, CalibratedReadout& c);
void to_json(Json& j, const PhysicsFlags& f);
void from_json(const Json& j, PhysicsFlags& f);
void to_json(Json& j, const ExponentialFit& f);
void from_json(const Json& j, ExponentialFit& f);
/// Scores are not serialized (they go to CSV); they read back empty.
void to_json(Json& j, const FidelityResult& r);
void from_json(const Json& j, FidelityResult& r);
void to_json(Json& j, const QndResult& r);
void from_json(const Json& j, QndResult& r);
void to_json(Json& j, const PostSelectionTiming& t);
void from_json(const Json& j, PostSelectionTiming& t);
void to_json(Json& j, const PostSelectionResult& r);
void from_json(const Json& j, PostSelectionResult& r);
void to_json(Json& j, const RbResult& r);
void from_json(const Json& j, RbResult& r);
void to_json(Json& j, const ThermalCalibration& c);
void from_json(const Json& j, ThermalCalibration& c);
void to_json(Json& j, const GaConfig& c);
void from_json(const Json& j, GaConfig& c);
void to_json(Json& j, const Genome& g);
void from_json(const Json& j, Genome& g);
void to_json(Json& j, const GaResult& r);
void from_json(const Json& j, GaResult& r);

}  // namespace rsim
