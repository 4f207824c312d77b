#include "rxm/object_model.hpp"

#include <cctype>
#include <set>

#include "rxm/error.hpp"

namespace rxm {

std::string setter_name(std::string_view property) {
  std::string out = "set";
  out += property;
  out[3] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[3])));
  return out;
}

const PropertyDecl* ClassDef::find_property(std::string_view prop) const {
  for (const auto& p : properties) {
    if (p.name == prop) return &p;
  }
  return nullptr;
}

const PropertyDecl* ClassDef::setter_target(std::string_view event) const {
  if (event.size() < 4 || event.substr(0, 3) != "set") return nullptr;
  for (const auto& p : properties) {
    if (setter_name(p.name) == event) return &p;
  }
  return nullptr;
}

std::optional<int> ClassDef::event_arity(std::string_view event) const {
  for (const auto& s : signals) {
    if (s.name == event) return s.arity;
  }
  for (const auto& m : methods) {
    if (m.name == event) return m.arity;
  }
  if (setter_target(event)) return 1;
  return std::nullopt;
}

ClassId ObjectStore::register_class(ClassDef def) {
  if (class_index_.count(def.name)) {
    throw Error(ErrorKind::duplicate_class, "class '" + def.name + "' already registered");
  }
  std::set<std::string> names;
  auto unique = [&](const std::string& n, std::string_view what) {
    if (!names.insert(std::string(what) + ":" + n).second) {
      throw Error(ErrorKind::duplicate_member,
                  "class '" + def.name + "' declares " + std::string(what) + " '" + n + "' twice");
    }
  };
  for (const auto& p : def.properties) {
    unique(p.name, "property");
    bool ok = p.default_value.kind() == p.kind;
    if (ok && p.kind == ValueKind::object_ref && !p.default_value.as_ref().is_null()) ok = false;
    if (!ok) {
      throw Error(ErrorKind::malformed_default, "default of " + def.name + "." + p.name +
                                                    " does not conform to " +
                                                    std::string(to_string(p.kind)));
    }
  }
  for (const auto& s : def.signals) unique(s.name, "event");
  for (const auto& m : def.methods) unique(m.name, "event");

  ClassId id{classes_.size()};
  class_index_.emplace(def.name, id.index);
  classes_.push_back(std::move(def));
  return id;
}

ObjectRef ObjectStore::create_object(ClassId cls, const std::string& id,
                                     const PropertyMap& overrides) {
  if (cls.index >= classes_.size()) {
    throw Error(ErrorKind::unknown_class, "unknown class id " + std::to_string(cls.index));
  }
  if (id.empty()) throw Error(ErrorKind::invalid_argument, "object id must not be empty");
  if (index_.count(id)) throw Error(ErrorKind::duplicate_object, "object '" + id + "' already exists");
  const ClassDef& def = classes_[cls.index];
  ObjectInstance obj{id, cls, {}};
  for (const auto& p : def.properties) obj.values.push_back(p.default_value);
  for (const auto& [name, value] : overrides) {
    std::size_t i = property_index(def, name);
    check_value(def.properties[i], value);
    obj.values[i] = value;
  }
  index_.emplace(id, objects_.size());
  objects_.push_back(std::move(obj));
  return ObjectRef{id};
}

std::size_t ObjectStore::property_index(const ClassDef& def, std::string_view prop) const {
  for (std::size_t i = 0; i < def.properties.size(); ++i) {
    if (def.properties[i].name == prop) return i;
  }
  throw Error(ErrorKind::unknown_property,
              "class '" + def.name + "' has no property '" + std::string(prop) + "'");
}

void ObjectStore::check_value(const PropertyDecl& decl, const Value& value) const {
  if (value.kind() != decl.kind) {
    throw Error(ErrorKind::kind_mismatch, "property '" + decl.name + "' expects " +
                                              std::string(to_string(decl.kind)) + ", got " +
                                              std::string(to_string(value.kind())));
  }
  if (decl.kind == ValueKind::object_ref && !value.as_ref().is_null()) {
    const ObjectRef& ref = value.as_ref();
    if (!contains(ref.id)) {
      throw Error(ErrorKind::unknown_object, "reference to unknown object '" + ref.id + "'");
    }
    if (!decl.ref_class.empty() && class_of(ref).name != decl.ref_class) {
      throw Error(ErrorKind::kind_mismatch, "property '" + decl.name + "' expects a " +
                                                decl.ref_class + " reference, got " +
                                                class_of(ref).name);
    }
  }
}

const ObjectInstance& ObjectStore::object(const ObjectRef& obj) const {
  auto it = index_.find(obj.id);
  if (it == index_.end()) throw Error(ErrorKind::unknown_object, "unknown object '" + obj.id + "'");
  return objects_[it->second];
}

ObjectInstance& ObjectStore::mutable_object(const ObjectRef& obj) {
  return const_cast<ObjectInstance&>(std::as_const(*this).object(obj));
}

const ClassDef& ObjectStore::class_of(const ObjectRef& obj) const {
  return classes_[object(obj).cls.index];
}

Value ObjectStore::get(const ObjectRef& obj, std::string_view prop) const {
  const ObjectInstance& o = object(obj);
  return o.values[property_index(classes_[o.cls.index], prop)];
}

Value ObjectStore::set(const ObjectRef& obj, std::string_view prop, Value value) {
  ObjectInstance& o = mutable_object(obj);
  const ClassDef& def = classes_[o.cls.index];
  std::size_t i = property_index(def, prop);
  check_value(def.properties[i], value);
  o.values[i] = std::move(value);
  return o.values[i];
}

Value ObjectStore::property_access(const ObjectRef& obj, std::string_view prop,
                                   std::optional<Value> write) {
  if (write) return set(obj, prop, std::move(*write));
  return get(obj, prop);
}

std::optional<ClassId> ObjectStore::find_class(std::string_view name) const {
  auto it = class_index_.find(name);
  if (it == class_index_.end()) return std::nullopt;
  return ClassId{it->second};
}

std::vector<ObjectRef> ObjectStore::objects_of(ClassId cls) const {
  if (cls.index >= classes_.size()) {
    throw Error(ErrorKind::unknown_class, "unknown class id " + std::to_string(cls.index));
  }
  std::vector<ObjectRef> out;
  for (const auto& o : objects_) {
    if (o.cls == cls) out.push_back(ObjectRef{o.id});
  }
  return out;
}

namespace {

class CandidateScope : public EvalScope {
 public:
  CandidateScope(const ObjectStore& store, const ObjectRef& self) : store_(store), self_(self) {}

  std::optional<Value> lookup(std::string_view name) const override {
    if (name == "self") return Value(self_);
    const ClassDef& def = store_.class_of(self_);
    if (def.find_property(name)) return store_.get(self_, name);
    if (store_.contains(name)) return Value(ObjectRef{std::string(name)});
    return std::nullopt;
  }

  Value property(const ObjectRef& obj, std::string_view name) const override {
    return store_.get(obj, name);
  }

 private:
  const ObjectStore& store_;
  const ObjectRef& self_;
};

class CandidateTypes : public TypeScope {
 public:
  CandidateTypes(const ObjectStore& store, const ClassDef& def) : store_(store), def_(def) {}

  std::optional<Type> name_type(std::string_view name) const override {
    if (name == "self") return Type::of(ValueKind::object_ref, def_.name);
    if (const auto* p = def_.find_property(name)) return Type::of(p->kind, p->ref_class);
    if (store_.contains(name)) {
      return Type::of(ValueKind::object_ref, store_.class_of(ObjectRef{std::string(name)}).name);
    }
    return std::nullopt;
  }

  std::optional<Type> property_type(const std::string& cls, std::string_view name) const override {
    auto id = store_.find_class(cls);
    if (!id) return std::nullopt;
    const auto* p = store_.class_def(*id).find_property(name);
    if (!p) return std::nullopt;
    return Type::of(p->kind, p->ref_class);
  }

 private:
  const ObjectStore& store_;
  const ClassDef& def_;
};

}  // namespace

std::vector<ObjectRef> ObjectStore::query_objects(ClassId cls, const Expr& predicate) const {
  if (cls.index >= classes_.size()) {
    throw Error(ErrorKind::unknown_class, "unknown class id " + std::to_string(cls.index));
  }
  std::vector<Diagnostic> diags;
  check_expr(predicate, CandidateTypes(*this, classes_[cls.index]), diags);
  if (!diags.empty()) throw Error(ErrorKind::unknown_property, diags.front().message);

  std::vector<ObjectRef> out;
  for (const auto& o : objects_) {
    if (!(o.cls == cls)) continue;
    ObjectRef ref{o.id};
    if (evaluate_bool(predicate, CandidateScope(*this, ref))) out.push_back(std::move(ref));
  }
  return out;
}

}  // namespace rxm
