#pragma once

// Shared graphs for tests: the prompt → CLIP agent → training data example
// and the six-call application.

#include <string>

#include "beestar/builder.hpp"
#include "beestar/program.hpp"

namespace beestar::testing {

inline Value builtin(const std::string& fn) { return Value::code("builtin", "main", fn); }

/// The six-call application: prompt entity, input widget that sets its
/// word, agent that watches it.
inline Graph six_call(const Value& code = builtin("uppercase")) {
    Graph g;
    Builder app(g);
    auto prompt = app.entity("prompt", {{"word", ValueType::String, Value()}});
    auto input = app.input("CLIPInputEntity");
    input.sets("word", {prompt});
    auto agt = app.agent("CLIPAgent", code);
    agt.watch("word", {prompt});
    return g;
}

inline const char* six_call_json() {
    return R"({
      "entities": [
        {"name": "prompt", "kind": "Entity",
         "properties": {"word": {"type": "string", "value": null}}},
        {"name": "CLIPInputEntity", "kind": "InputEntity", "properties": {}},
        {"name": "CLIPAgent", "kind": "AgentEntity",
         "properties": {"source code": {"type": "code",
           "value": {"language": "builtin", "entrypoint": "main", "text": "uppercase"}}}}
      ],
      "edges": [
        {"from": "CLIPInputEntity", "to": "prompt", "label": "sets word"},
        {"from": "CLIPAgent", "to": "prompt", "label": "watches word"}
      ]
    })";
}

/// Training data gallery application: input sets Prompt.word, CLIPAgent
/// watches it and sets Training Data.data, the gallery watches the data.
inline ProgramSpec gallery_app(const Value& clip_code = builtin("label:8")) {
    Graph g;
    Builder app(g);
    auto data = app.entity("Training Data",
                           {{"data", ValueType::Array, Value::link("file:train.v0")}});
    auto prompt = app.entity("Prompt", {{"word", ValueType::String, Value()}});
    auto input = app.input("CLIPInputEntity", "Label images containing");
    input.sets("word", {prompt});
    auto clip = app.agent("CLIPAgent", clip_code, {Value::string("torch"), Value::string("clip")});
    clip.watch("word", {prompt});
    clip.sets("data", {data});
    auto gallery = app.gallery("TrainDataGallery", "#202020", "#00ff00");
    gallery.watch("data", {data});
    auto cnn = app.agent("CNNAgent", builtin("identity"));
    auto button = app.button("TransferLearn", "Transfer learn", "play");
    button.messages(cnn);
    return export_program(g);
}

} // namespace beestar::testing
