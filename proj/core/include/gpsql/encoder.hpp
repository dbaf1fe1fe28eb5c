#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gpsql/link.hpp"
#include "gpsql/nn.hpp"
#include "gpsql/params.hpp"
#include "gpsql/tape.hpp"
#include "gpsql/vocab.hpp"

namespace gpsql {

struct EncoderConfig {
    std::size_t embed_dim = 64;
    std::size_t hidden = 64;  // per direction
    /// Width of every contextualized row (both directions concatenated).
    std::size_t memory_dim() const { return 2 * hidden; }
};

/// Parameter ids of the encoder: token embeddings plus one recurrent cell per
/// direction. All are registered in ParamGroup::Encoder.
struct EncoderParams {
    int embedding = -1;  // (vocab_size x embed_dim)
    LstmParams fwd;
    LstmParams bwd;
    EncoderConfig config;
    int vocab_size = 0;
};

EncoderParams register_encoder(ParamStore& store, int vocab_size, const EncoderConfig& config);

// ---- tape-level (differentiable) --------------------------------------------------

/// One embedding row per token; out-of-vocabulary tokens use the UNK row.
std::vector<NodeRef> embed_sequence_nodes(Tape& tape, const ParamStore& store,
                                          const EncoderParams& enc, const Vocab& vocab,
                                          const std::vector<std::string>& tokens);

/// Bidirectional recurrent pass; one output row per input row, each row the
/// concatenation of the forward and backward hidden states at that position.
std::vector<NodeRef> contextualize_nodes(Tape& tape, const ParamStore& store,
                                         const EncoderParams& enc,
                                         const std::vector<NodeRef>& embeddings);

/// Arithmetic mean of every row covered by the given segments.
NodeRef pool_segments_nodes(Tape& tape, const std::vector<NodeRef>& rows,
                            const std::vector<Segment>& segments);

/// Everything the decoder consumes, as nodes on one tape.
struct EncodedNodes {
    std::vector<NodeRef> rows;      // full contextualized sequence
    std::vector<NodeRef> question;  // question-token rows (subset of `rows`)
    std::vector<NodeRef> columns;   // one pooled vector per column (name + values)
    std::vector<NodeRef> tables;    // one pooled vector per table
};

EncodedNodes encode_nodes(Tape& tape, const ParamStore& store, const EncoderParams& enc,
                          const Vocab& vocab, const LinkedSequence& seq);

// ---- value-level -------------------------------------------------------------------

/// One embedding row per token of the serialized sequence, sentinels included.
std::vector<Vec> embed_sequence(const ParamStore& store, const EncoderParams& enc,
                                const Vocab& vocab, const LinkedSequence& seq);

/// Bidirectional recurrent pass over embedding rows (row count preserved).
std::vector<Vec> contextualize(const ParamStore& store, const EncoderParams& enc,
                               const std::vector<Vec>& embeddings);

/// Mean of the rows in `item_span` plus the rows in `value_span` (if given);
/// spans are [begin, end) row ranges. Throws EmptySpan when the union is
/// empty, IndexOutOfRange when a span leaves the matrix.
Vec pool_item(const std::vector<Vec>& memory, std::pair<int, int> item_span,
              std::optional<std::pair<int, int>> value_span = std::nullopt);

/// Encoded example as plain values.
struct EncodedMemory {
    std::vector<Vec> rows;
    std::vector<Vec> question;
    std::vector<Vec> columns;
    std::vector<Vec> tables;
};

EncodedMemory encode_memory(const ParamStore& store, const EncoderParams& enc, const Vocab& vocab,
                            const LinkedSequence& seq);

}  // namespace gpsql
