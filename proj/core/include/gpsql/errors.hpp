#pragma once

#include <stdexcept>
#include <string>

namespace gpsql {

// Base for every error this library raises deliberately.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grammar / AST / action-sequence errors.
struct GrammarError : Error {
    using Error::Error;
};
struct UnsupportedSyntax : Error {
    explicit UnsupportedSyntax(const std::string& where)
        : Error("unsupported syntax: " + where) {}
};
struct UnknownIdentifier : Error {
    explicit UnknownIdentifier(const std::string& name)
        : Error("unknown identifier: " + name), name(name) {}
    std::string name;
};
struct IncompleteAst : Error {
    IncompleteAst() : Error("AST has unfilled fields") {}
};
struct IllegalAction : Error {
    IllegalAction(int step, const std::string& detail)
        : Error("illegal action at step " + std::to_string(step) + ": " + detail),
          step(step) {}
    int step;
};
struct TruncatedSequence : Error {
    TruncatedSequence() : Error("action sequence ended with pending fields") {}
};
struct TrailingActions : Error {
    explicit TrailingActions(int step)
        : Error("actions remain after derivation completed at step " + std::to_string(step)),
          step(step) {}
    int step;
};
struct CompleteDerivation : Error {
    CompleteDerivation() : Error("derivation is already complete") {}
};
struct MaxLengthExceeded : Error {
    MaxLengthExceeded() : Error("decode exceeded the maximum action length") {}
};
struct ValueNotCopyable : Error {
    explicit ValueNotCopyable(const std::string& literal)
        : Error("value literal does not occur in the question: '" + literal + "'") {}
};

// Schema / dataset errors.
struct MalformedSchema : Error {
    explicit MalformedSchema(const std::string& reason)
        : Error("malformed schema: " + reason) {}
};
struct MalformedInput : Error {
    MalformedInput(const std::string& path, const std::string& reason)
        : Error("malformed input " + path + ": " + reason) {}
};
struct FileNotFound : Error {
    explicit FileNotFound(const std::string& path)
        : Error("file not found: " + path) {}
};
struct IdMismatch : Error {
    explicit IdMismatch(const std::string& detail) : Error("id mismatch: " + detail) {}
};

// Numeric-core errors.
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& detail)
        : Error("shape mismatch: " + detail) {}
};
struct AllMasked : Error {
    AllMasked() : Error("attention mask hides every memory row") {}
};
struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& detail)
        : Error("index out of range: " + detail) {}
};
struct NonFiniteGradient : Error {
    explicit NonFiniteGradient(const std::string& param)
        : Error("non-finite gradient in " + param) {}
};
struct EmptySpan : Error {
    EmptySpan() : Error("pooling span is empty") {}
};

// Decoder errors.
struct MissingMemory : Error {
    MissingMemory() : Error("NORMAL mode requires encoder memory") {}
};
struct IllegalGoldSequence : Error {
    IllegalGoldSequence(int step, const std::string& detail)
        : Error("gold action illegal at step " + std::to_string(step) + ": " + detail),
          step(step) {}
    int step;
};

// Training errors.
struct NegativeFloodingLevel : Error {
    NegativeFloodingLevel() : Error("flooding level must be >= 0") {}
};
struct EmptyCorpus : Error {
    EmptyCorpus() : Error("training corpus is empty") {}
};
struct EmptyLog : Error {
    EmptyLog() : Error("loss log is empty") {}
};
struct GradientExplosion : Error {
    explicit GradientExplosion(long step)
        : Error("gradient explosion at step " + std::to_string(step)), step(step) {}
    long step;
};

}  // namespace gpsql
