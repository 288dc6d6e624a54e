"""
Project files: loading, writing and traceability queries.
"""
import json
import logging
from pathlib import Path
from typing import Iterable, List

from pydantic import ValidationError as PydanticValidationError

from errors import ProjectError
from schemas import Project, Requirement
from validator import StructuralValidator

logger = logging.getLogger(__name__)


def load_project(path) -> Project:
    """
    Read and fully validate a project file.

    Constraint strings are kept verbatim; parsing happens per check.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProjectError(f"cannot read {path}: {e.strerror or e}") from e

    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ProjectError(f"malformed project file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ProjectError(f"malformed project file {path}: top level must be an object")
    missing = [key for key in ("signature", "requirements", "bounds") if key not in data]
    if missing:
        raise ProjectError(f"malformed project file {path}: missing {', '.join(missing)}")

    try:
        project = Project.model_validate(data)
    except PydanticValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ProjectError(f"malformed project file {path}: {where}: {first['msg']}") from e

    results = StructuralValidator().validate_all(project)
    for warning in results["warnings"]:
        logger.warning(f"⚠️  {warning}")
    logger.info(
        f"✅ Loaded {path.name}: {len(project.signature.classes)} classes, "
        f"{len(project.requirements)} requirements"
    )
    return project


def write_project(project: Project, path) -> None:
    Path(path).write_text(project.model_dump_json(indent=2), encoding="utf-8")


def requirements_for(project: Project, ids: Iterable[str]) -> List[Requirement]:
    """Requirements with the given ids, in declaration order."""
    wanted = set(ids)
    known = {req.id for req in project.requirements}
    unknown = sorted(wanted - known)
    if unknown:
        raise ProjectError(f"unknown id {', '.join(unknown)}")
    return [req for req in project.requirements if req.id in wanted]


def linked_requirements(project: Project, req_id: str) -> List[Requirement]:
    """Transitive closure of traceability links from req_id (excluding itself)."""
    start = project.requirement(req_id)
    if start is None:
        raise ProjectError(f"unknown id {req_id}")
    seen = set()
    frontier = list(start.links)
    while frontier:
        current = frontier.pop()
        if current in seen or current == req_id:
            continue
        seen.add(current)
        frontier.extend(project.requirement(current).links)
    return [req for req in project.requirements if req.id in seen]


def requirements_by_category(project: Project, category: str) -> List[Requirement]:
    return [req for req in project.requirements if req.category == category]
