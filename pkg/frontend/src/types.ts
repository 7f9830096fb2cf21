/** Wire types mirroring the sim service's /api/state and /api/events payloads. */

export interface Disposition {
  aggressiveness: number;
  covetousness: number;
  strength: number;
  desire_for_peace: number;
  desire_for_glory: number;
  temperature: number;
  top_p: number;
}

export interface PendingSummary {
  actor: number;
  kind: string;
  day: number;
}

export interface AgentSnapshot {
  id: number;
  name: string;
  disposition: Disposition;
  food: number;
  land: number;
  social_position: number;
  starving: boolean;
  superior: number | null;
  subordinates: number[];
  memory: string[];
  memory_capacity: number;
  pending?: PendingSummary[];
}

export interface CommonwealthStatus {
  formed: boolean;
  day: number | null;
  sovereign: number | null;
}

export interface Snapshot {
  day: number;
  population: number;
  running: boolean;
  commonwealth: CommonwealthStatus;
  last_sequence: number;
  agents: AgentSnapshot[];
}

export interface EventOutcome {
  food: Record<string, number>;
  land: Record<string, number>;
  social: Record<string, number>;
  concession: [number, number] | null;
  detail: string;
}

export interface SimEvent {
  day: number;
  seq: number;
  actor: number;
  kind: string;
  target: number | null;
  payload: Record<string, unknown>;
  response: string | null;
  outcome: EventOutcome;
  reason: string | null;
  emoji?: string;
  actor_name?: string;
  target_name?: string;
  milestone?: string;
}

export interface ControlCommand {
  command: "run" | "pause" | "step" | "reset";
  days?: number;
  seed?: number;
  config?: Record<string, unknown>;
}
