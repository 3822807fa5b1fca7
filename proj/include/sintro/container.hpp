#pragma once

#include "sintro/classifier.hpp"
#include "sintro/introspector.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

// Binary model container. Layout, all little-endian:
//
//   "SINT1"                       magic
//   u8                            format version (1)
//   u32 manifest_len, bytes       manifest (JSON: kind + shapes + metadata)
//   u32 array_count
//   per array: u32 name_len, name bytes; u32 ndim; u64 dims[ndim];
//              f32 data[prod(dims)]
//   u64                           FNV-1a checksum over manifest + array bytes
//
// The manifest's declared shapes must match the array payloads; loads verify
// magic, version, checksum and shapes.

namespace sintro {

struct ArrayF32 {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    std::size_t element_count() const;
};

struct ModelContainer {
    std::string kind; // "classifier" | "autoencoder" | "estimator" | "records"
    nlohmann::json manifest;
    std::vector<ArrayF32> arrays;

    const ArrayF32& array(const std::string& name) const; // throws if missing
};

void save_container(const ModelContainer& c, const std::string& path);
ModelContainer load_container(const std::string& path);
// As load_container but insists on a kind, for prerequisite checks.
ModelContainer load_container(const std::string& path, const std::string& expected_kind);

void save_classifier(const ClassifierModel& model, const std::string& path);
ClassifierModel load_classifier(const std::string& path);

void save_autoencoder(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_autoencoder(const std::string& path);

void save_estimator(const EstimatorModel& model, const std::string& path);
EstimatorModel load_estimator(const std::string& path);

void save_records(const std::vector<ActivationRecord>& records, const std::string& path);
std::vector<ActivationRecord> load_records(const std::string& path);

} // namespace sintro
