"""PDO-aware uplink link adaptation toolkit."""
