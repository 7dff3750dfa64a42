"""Pydantic request/response models for the hub HTTP API."""
from __future__ import annotations

from pydantic import BaseModel, Field


class EnrollRequest(BaseModel):
    display_name: str = Field(min_length=1)


class EnrollResponse(BaseModel):
    device_id: str
    secret: str  # hex; returned exactly once


class DeviceInfo(BaseModel):
    device_id: str
    display_name: str
    enrolled_at_ms: int
    status: str


class DeviceListResponse(BaseModel):
    devices: list[DeviceInfo]


class IngestResponse(BaseModel):
    status: str  # stored | duplicate
    event_id: str
    seq: int | None = None


class ChannelSpec(BaseModel):
    kind: str = "push"  # push | webhook
    url: str | None = None


class SubscriptionCreate(BaseModel):
    subscriber_id: str = Field(min_length=1)
    device_id: str | None = None
    label: str | None = None
    min_confidence: float = Field(default=0.0, ge=0.0, le=1.0)
    channel: ChannelSpec = ChannelSpec()


class RespondRequest(BaseModel):
    action: str  # respond | ignore
    message: str | None = None


class CommandEnqueueRequest(BaseModel):
    type: str
    min_accuracy: float | None = Field(default=None, ge=0.0, le=1.0)


class AskRequest(BaseModel):
    utterance: str
    now_ms: int | None = None


class StatusResponse(BaseModel):
    status: str
