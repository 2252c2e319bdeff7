#pragma once

#include <stdexcept>
#include <string>

namespace mteval {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data-shaped failures (CLI exit code 2).
struct MissingHypothesis : Error { using Error::Error; };
struct NoSourceOrReference : Error { using Error::Error; };
struct OffsetsOutOfRange : Error { using Error::Error; };

struct MalformedLine : Error { using Error::Error; };
struct UnbalancedMarkers : Error { using Error::Error; };

struct EmptyRatings : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct NegativeRaw : Error { using Error::Error; };

struct UnknownLanguageCode : Error { using Error::Error; };
struct MissingField : Error { using Error::Error; };
struct InvalidPromptMode : Error { using Error::Error; };

struct EmptyNeedle : Error { using Error::Error; };
struct SpanNotInText : Error { using Error::Error; };
// Raised when expansion saturates both sides without reaching a context that
// locate_span would resolve back to the original occurrence.
struct ContextExhausted : Error { using Error::Error; };
struct ParseFailure : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct UnknownSeverity : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct SpanNotFound : Error { using Error::Error; };
struct ContextNotFound : Error { using Error::Error; };
struct SpanNotInContext : Error { using Error::Error; };

struct LengthMismatch : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };

struct NoComparablePairs : Error { using Error::Error; };
struct TooFewSystems : Error { using Error::Error; };
struct TooFewSegments : Error { using Error::Error; };

struct NoReference : Error { using Error::Error; };
struct EmptyPool : Error { using Error::Error; };

// Transport-shaped failures (CLI exit code 3).
struct TransportError : Error { using Error::Error; };
struct Timeout : TransportError { using TransportError::TransportError; };
struct HttpError : TransportError { using TransportError::TransportError; };
struct ExhaustedRetries : TransportError { using TransportError::TransportError; };
struct AllEndpointsFailed : TransportError { using TransportError::TransportError; };

}  // namespace mteval
