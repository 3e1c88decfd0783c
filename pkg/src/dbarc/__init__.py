"""Software-invariant archiving of relational databases.

dbarc extracts schema and data from a source database, maps both onto a
fixed standard-SQL subset, walks the user through clearance of whatever
cannot be mapped, writes a self-contained plain-text archive, and reloads
finished archives into an embedded target engine for browsing and querying.
"""

__version__ = "0.1.0"
