"""
Structural validation of signatures and projects.
Runs before any constraint is parsed; collects every violation it can find.
"""
import re
from typing import Any, Dict, List

from errors import ProjectError
from schemas import AttributeDef, Diagnostic, Project, Signature


class ValidationError(ProjectError):
    """Raised when structural validation fails."""
    pass


IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# Quantifier heads name the classes a constraint ranges over.
CLASS_REFERENCE = re.compile(r"\b(?:forall|for\s+all|exists|there\s+exists)\s+[A-Za-z_]\w*\s+in\s+([A-Za-z_]\w*)")

FORMAL_CATEGORIES = ("requirement", "scenario", "property")


def referenced_classes(constraint: str) -> List[str]:
    """Class names appearing as quantifier domains in a constraint string."""
    return CLASS_REFERENCE.findall(constraint)


class StructuralValidator:
    """
    Enforces the signature and project invariants.
    Prevents:
    - Duplicate classes, attributes and requirement ids
    - Dangling references and links
    - Unbounded integers and misplaced `continuous` flags
    - Constraints over classes with no instantiation bound
    """

    def validate_signature(self, sig: Signature) -> List[Diagnostic]:
        diagnostics: List[Diagnostic] = []
        seen_classes = set()
        for cls in sig.classes:
            if not IDENTIFIER.match(cls.name):
                diagnostics.append(Diagnostic(location=f"class {cls.name}", message="invalid class name"))
            if cls.name in seen_classes:
                diagnostics.append(Diagnostic(location=f"class {cls.name}", message=f"duplicate class {cls.name}"))
            seen_classes.add(cls.name)

            seen_attrs = set()
            for attr in cls.attributes:
                location = f"{cls.name}.{attr.name}"
                if attr.name in seen_attrs:
                    diagnostics.append(Diagnostic(location=location, message=f"duplicate attribute {attr.name}"))
                seen_attrs.add(attr.name)
                diagnostics.extend(self._validate_attribute(attr, location, sig))

        seen_globals = set()
        for attr in sig.globals:
            location = f"global {attr.name}"
            if attr.name in seen_globals:
                diagnostics.append(Diagnostic(location=location, message=f"duplicate global {attr.name}"))
            seen_globals.add(attr.name)
            diagnostics.extend(self._validate_attribute(attr, location, sig))
        return diagnostics

    def _validate_attribute(self, attr: AttributeDef, location: str, sig: Signature) -> List[Diagnostic]:
        found: List[Diagnostic] = []
        t = attr.type
        if not IDENTIFIER.match(attr.name):
            found.append(Diagnostic(location=location, message="invalid attribute name"))
        if t.continuous and t.kind != "real":
            found.append(Diagnostic(location=location, message=f"continuous flag on {t.kind} attribute"))
        if t.kind == "enumeration":
            symbols = t.symbols or []
            if not symbols:
                found.append(Diagnostic(location=location, message="empty enumeration"))
            elif len(set(symbols)) != len(symbols):
                found.append(Diagnostic(location=location, message="duplicate enumeration symbol"))
        if t.kind == "integer":
            if t.lo is None or t.hi is None:
                found.append(Diagnostic(location=location, message="integer attribute needs a range lo..hi"))
            elif t.lo > t.hi:
                found.append(Diagnostic(location=location, message=f"empty integer range {t.lo}..{t.hi}"))
        if t.kind == "reference":
            if not t.target or sig.get_class(t.target) is None:
                found.append(Diagnostic(location=location, message=f"reference to undeclared class {t.target}"))
        return found

    def validate_project(self, project: Project) -> Dict[str, Any]:
        """
        Run all project checks.

        Returns:
            {"valid": bool, "errors": [Diagnostic], "warnings": [str]}
        """
        results: Dict[str, Any] = {"valid": True, "errors": [], "warnings": []}
        results["errors"].extend(self.validate_signature(project.signature))
        self._validate_ids(project, results)
        self._validate_categories(project, results)
        self._validate_bounds(project, results)
        results["valid"] = not results["errors"]
        return results

    def _validate_ids(self, project: Project, results: Dict):
        ids = set()
        for req in project.requirements:
            if req.id in ids:
                results["errors"].append(Diagnostic(location=req.id, message=f"duplicate id {req.id}"))
            ids.add(req.id)
        for req in project.requirements:
            for link in req.links:
                if link not in ids:
                    results["errors"].append(Diagnostic(location=req.id, message=f"dangling link {link}"))

    def _validate_categories(self, project: Project, results: Dict):
        for req in project.requirements:
            if req.constraints and req.category not in FORMAL_CATEGORIES:
                results["errors"].append(Diagnostic(
                    location=req.id,
                    message=f"{req.category} fragments cannot carry constraints",
                ))
            if req.category in FORMAL_CATEGORIES and not req.constraints:
                results["warnings"].append(f"{req.id} has no formal constraint")

    def _validate_bounds(self, project: Project, results: Dict):
        sig = project.signature
        for name, n in project.bounds.items():
            if sig.get_class(name) is None:
                results["errors"].append(Diagnostic(location=f"bounds.{name}", message=f"bound for undeclared class {name}"))
            if n < 1:
                results["errors"].append(Diagnostic(location=f"bounds.{name}", message=f"bound must be >= 1, got {n}"))

        needed = set()
        for cls in sig.classes:
            if cls.name not in project.bounds:
                continue
            for attr in cls.attributes:
                if attr.type.kind == "reference" and attr.type.target:
                    needed.add((attr.type.target, f"{cls.name}.{attr.name}"))
        for req in project.requirements:
            for constraint in req.constraints:
                for name in referenced_classes(constraint):
                    needed.add((name, req.id))
        for name, where in sorted(needed):
            if name not in project.bounds:
                results["errors"].append(Diagnostic(location=where, message=f"missing bound {name}"))

    def validate_all(self, project: Project) -> Dict[str, Any]:
        """Validate and raise on the first collected error."""
        results = self.validate_project(project)
        if results["errors"]:
            raise ValidationError("; ".join(str(d) for d in results["errors"]))
        return results


def validate_signature(sig: Signature) -> List[Diagnostic]:
    return StructuralValidator().validate_signature(sig)
