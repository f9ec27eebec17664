#pragma once

#include <stdexcept>
#include <string>

namespace taskinduct {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// prompt templates
struct MissingSlot : Error {
    explicit MissingSlot(const std::string& slot)
        : Error("missing required slot: " + slot), slot_name(slot) {}
    std::string slot_name;
};
struct UnfilledSlot : Error {
    using Error::Error;
};
struct EmptyPairs : Error {
    EmptyPairs() : Error("cannot serialize an empty pair list") {}
};

// gateway
struct ProviderError : Error {
    ProviderError(int status_, const std::string& body_)
        : Error("provider error " + std::to_string(status_) + ": " + body_),
          status(status_),
          body(body_) {}
    int status;
    std::string body;
};
struct AuthError : Error {
    using Error::Error;
};
struct BudgetExceeded : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// dataset store
struct SchemaError : Error {
    SchemaError(const std::string& file_, const std::string& field_)
        : Error("schema error in " + file_ + ": field '" + field_ + "'"),
          file(file_),
          field(field_) {}
    std::string file;
    std::string field;
};
struct DuplicateId : Error {
    using Error::Error;
};
struct NotEnoughItems : Error {
    using Error::Error;
};
struct BadAlphabet : Error {
    using Error::Error;
};
struct BadShift : Error {
    using Error::Error;
};
struct BadWordLength : Error {
    using Error::Error;
};

// pipeline
struct StrategyExtractionFailed : Error {
    explicit StrategyExtractionFailed(const std::string& item)
        : Error("no <strategy> block in response for item " + item), item_id(item) {}
    std::string item_id;
};
struct InstructionExtractionFailed : Error {
    using Error::Error;
};

// evaluation
struct MissingGold : Error {
    explicit MissingGold(const std::string& item)
        : Error("item has no gold answer: " + item), item_id(item) {}
    std::string item_id;
};
struct MisalignedSettings : Error {
    using Error::Error;
};
struct MissingCell : Error {
    using Error::Error;
};
struct MissingBaseline : Error {
    using Error::Error;
};

}  // namespace taskinduct
