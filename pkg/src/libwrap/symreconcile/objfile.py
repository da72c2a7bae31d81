"""Read symbol tables straight from ELF shared objects and ar archives.

Only what reconciliation needs is parsed: global and weak symbol names,
split into defined and undefined.  Weak definitions count as defined.
Version suffixes (``name@VERSION``) are stripped: both linker wrap flags
and dynamic-loader interception operate on unversioned names.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

from ..errors import LibwrapError

ELF_MAGIC = b"\x7fELF"
ARCHIVE_MAGIC = b"!<arch>\n"
THIN_ARCHIVE_MAGIC = b"!<thin>\n"

_SHT_SYMTAB = 2
_SHT_DYNSYM = 11
_ET_REL = 1
_ET_DYN = 3

_STB_GLOBAL = 1
_STB_WEAK = 2
_SHN_UNDEF = 0


class ObjectFormatError(LibwrapError):
    pass


@dataclass(frozen=True)
class SymbolTable:
    origin: str
    kind: str                  # shared_object | static_archive
    defined: frozenset[str]
    undefined: frozenset[str]

    def __post_init__(self):
        if self.defined & self.undefined:
            raise ValueError("a symbol cannot be both defined and undefined")


def read_symbols(library) -> SymbolTable:
    """Symbol table of a shared object or static archive.

    For shared objects the dynamic symbol table is read (those are the
    symbols interception can see); for archives the union over all
    member objects.
    """
    path = os.fspath(library)
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(ELF_MAGIC):
        defined, undefined, etype = _elf_symbols(data, path)
        if etype == _ET_REL:
            raise ObjectFormatError(
                f"{path} is a relocatable object, not a shared object; "
                "package it into an archive or link it into a library"
            )
        kind = "shared_object"
    elif data.startswith(ARCHIVE_MAGIC):
        defined, undefined = _archive_symbols(data, path)
        kind = "static_archive"
    elif data.startswith(THIN_ARCHIVE_MAGIC):
        raise ObjectFormatError(f"{path} is a thin archive, which is not supported")
    else:
        magic = data[:4]
        raise ObjectFormatError(
            f"{path} is neither an ELF object nor an ar archive "
            f"(magic bytes {magic!r})"
        )
    undefined -= defined
    return SymbolTable(
        origin=path,
        kind=kind,
        defined=frozenset(defined),
        undefined=frozenset(undefined),
    )


def _strip_version(name: str) -> str:
    at = name.find("@")
    return name[:at] if at > 0 else name


def _elf_symbols(data: bytes, path: str, prefer_symtab: bool = False):
    """Global/weak (defined, undefined) names plus the ELF type."""
    if len(data) < 64:
        raise ObjectFormatError(f"{path}: truncated ELF header")
    ei_class = data[4]
    ei_data = data[5]
    if ei_class not in (1, 2) or ei_data not in (1, 2):
        raise ObjectFormatError(
            f"{path}: unsupported ELF class/encoding ({ei_class}/{ei_data})"
        )
    is64 = ei_class == 2
    endian = "<" if ei_data == 1 else ">"
    if is64:
        e_type, = struct.unpack_from(endian + "H", data, 16)
        e_shoff, = struct.unpack_from(endian + "Q", data, 0x28)
        e_shentsize, e_shnum = struct.unpack_from(endian + "HH", data, 0x3A)
        sh_fmt = endian + "IIQQQQIIQQ"
    else:
        e_type, = struct.unpack_from(endian + "H", data, 16)
        e_shoff, = struct.unpack_from(endian + "I", data, 0x20)
        e_shentsize, e_shnum = struct.unpack_from(endian + "HH", data, 0x2E)
        sh_fmt = endian + "IIIIIIIIII"

    sections = []
    for i in range(e_shnum):
        off = e_shoff + i * e_shentsize
        if off + struct.calcsize(sh_fmt) > len(data):
            raise ObjectFormatError(f"{path}: section header {i} out of bounds")
        sections.append(struct.unpack_from(sh_fmt, data, off))

    defined: set[str] = set()
    undefined: set[str] = set()
    wanted = _SHT_SYMTAB if (e_type == _ET_REL or prefer_symtab) else _SHT_DYNSYM
    tables = [s for s in sections if s[1] == wanted]
    if not tables and wanted == _SHT_DYNSYM:
        tables = [s for s in sections if s[1] == _SHT_SYMTAB]
    for sec in tables:
        sh_offset, sh_size, sh_link, sh_entsize = sec[4], sec[5], sec[6], sec[9]
        if sh_entsize == 0 or sh_link >= len(sections):
            continue
        str_sec = sections[sh_link]
        strtab = data[str_sec[4]:str_sec[4] + str_sec[5]]
        for off in range(sh_offset, sh_offset + sh_size, sh_entsize):
            if is64:
                st_name, st_info, _, st_shndx = struct.unpack_from(
                    endian + "IBBH", data, off)
            else:
                st_name, = struct.unpack_from(endian + "I", data, off)
                st_info, _, st_shndx = struct.unpack_from(
                    endian + "BBH", data, off + 12)
            bind = st_info >> 4
            if bind not in (_STB_GLOBAL, _STB_WEAK):
                continue
            end = strtab.find(b"\0", st_name)
            if end < 0 or end == st_name:
                continue
            name = _strip_version(strtab[st_name:end].decode("utf-8", "replace"))
            if st_shndx == _SHN_UNDEF:
                undefined.add(name)
            else:
                defined.add(name)
    return defined, undefined, e_type


def _archive_symbols(data: bytes, path: str):
    defined: set[str] = set()
    undefined: set[str] = set()
    pos = len(ARCHIVE_MAGIC)
    while pos + 60 <= len(data):
        header = data[pos:pos + 60]
        if header[58:60] != b"`\n":
            raise ObjectFormatError(f"{path}: corrupt archive member header at {pos}")
        name = header[0:16].decode("ascii", "replace").rstrip()
        try:
            size = int(header[48:58].decode("ascii").strip() or "0")
        except ValueError as exc:
            raise ObjectFormatError(f"{path}: bad member size at {pos}") from exc
        body = data[pos + 60:pos + 60 + size]
        # Skip the symbol index ('/') and extended-name table ('//').
        if name not in ("/", "//") and body.startswith(ELF_MAGIC):
            mem_def, mem_undef, _ = _elf_symbols(body, f"{path}({name})")
            defined |= mem_def
            undefined |= mem_undef
        pos += 60 + size + (size & 1)
    return defined, undefined
