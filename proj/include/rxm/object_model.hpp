#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rxm/expr.hpp"
#include "rxm/source_loc.hpp"
#include "rxm/value.hpp"

namespace rxm {

struct PropertyDecl {
  std::string name;
  ValueKind kind = ValueKind::integer;
  std::string ref_class;  // optional static class of an object-ref property
  Value default_value;
  SourceLoc loc;

  bool operator==(const PropertyDecl&) const = default;
};

struct EventDecl {
  std::string name;
  int arity = 0;
  SourceLoc loc;

  bool operator==(const EventDecl&) const = default;
};

struct ClassDef {
  std::string name;
  std::vector<PropertyDecl> properties;
  std::vector<EventDecl> signals;
  std::vector<EventDecl> methods;
  SourceLoc loc;

  const PropertyDecl* find_property(std::string_view prop) const;

  /// Arity of a receivable event: declared signals and methods, plus the
  /// implicit one-argument setter `setX` for every property `x`.
  std::optional<int> event_arity(std::string_view event) const;

  /// Property written by an implicit setter event, if `event` is one.
  const PropertyDecl* setter_target(std::string_view event) const;

  bool operator==(const ClassDef&) const = default;
};

/// Name of the implicit setter event for a property: state -> setState.
std::string setter_name(std::string_view property);

struct ClassId {
  std::size_t index = 0;
  bool operator==(const ClassId&) const = default;
};

struct ObjectInstance {
  std::string id;
  ClassId cls;
  std::vector<Value> values;  // parallel to ClassDef::properties
};

using PropertyMap = std::vector<std::pair<std::string, Value>>;

/// The single object universe read and written by machines and chart copies.
/// Objects are never deleted; iteration order is creation order.
class ObjectStore {
 public:
  ClassId register_class(ClassDef def);
  ObjectRef create_object(ClassId cls, const std::string& id, const PropertyMap& overrides = {});

  Value get(const ObjectRef& obj, std::string_view prop) const;
  Value set(const ObjectRef& obj, std::string_view prop, Value value);
  Value property_access(const ObjectRef& obj, std::string_view prop,
                        std::optional<Value> write = std::nullopt);

  /// Instances of `cls` for which `predicate` holds, in creation order. Bare
  /// names in the predicate denote the candidate's properties; `self` denotes
  /// the candidate; other names are object ids.
  std::vector<ObjectRef> query_objects(ClassId cls, const Expr& predicate) const;
  std::vector<ObjectRef> objects_of(ClassId cls) const;

  std::optional<ClassId> find_class(std::string_view name) const;
  const ClassDef& class_def(ClassId id) const { return classes_.at(id.index); }
  const ClassDef& class_of(const ObjectRef& obj) const;
  const std::vector<ClassDef>& classes() const { return classes_; }

  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }
  const ObjectInstance& object(const ObjectRef& obj) const;
  const std::vector<ObjectInstance>& objects() const { return objects_; }

  /// Checks a value against a declared property (kind, ref liveness, ref class).
  void check_value(const PropertyDecl& decl, const Value& value) const;

 private:
  ObjectInstance& mutable_object(const ObjectRef& obj);
  std::size_t property_index(const ClassDef& def, std::string_view prop) const;

  std::vector<ClassDef> classes_;
  std::map<std::string, std::size_t, std::less<>> class_index_;
  std::vector<ObjectInstance> objects_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace rxm
